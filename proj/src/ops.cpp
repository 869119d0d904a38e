#include "hcnet/ops.hpp"

#include <cmath>

namespace hcnet {

static void require_float(const Tensor& t, const char* what) {
  if (t.dtype() != DType::f32 && t.dtype() != DType::f64)
    throw ValueError(std::string(what) + ": float dtype required, got " +
                     dtype_name(t.dtype()));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_float(a, "matmul");
  require_float(b, "matmul");
  if (a.ndim() != 2 || b.ndim() != 2)
    throw ShapeError("matmul: 2-D operands required");
  const size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  if (b.dim(0) != k)
    throw ShapeError("matmul: inner dims mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  Tensor c({m, p});
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (size_t q = 0; q < k; ++q) acc += a.at(i, q) * b.at(q, j);
      c.at(i, j) = acc;
    }
  }
  macs::add(static_cast<uint64_t>(m) * k * p);
  return c;
}

void matmul_backward(const Tensor& a, const Tensor& b, const Tensor& d_c,
                     Tensor* d_a, Tensor* d_b) {
  if (d_a) *d_a = matmul(d_c, transpose2d(b));
  if (d_b) *d_b = matmul(transpose2d(a), d_c);
}

Tensor transpose2d(const Tensor& a) {
  if (a.ndim() != 2) throw ShapeError("transpose2d: 2-D required");
  Tensor t({a.dim(1), a.dim(0)}, a.dtype());
  for (size_t i = 0; i < a.dim(0); ++i)
    for (size_t j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

namespace {
struct AxisStrides {
  size_t outer, n, inner;
};
AxisStrides axis_strides(const Tensor& x, size_t axis) {
  if (axis >= x.ndim()) throw ShapeError("softmax_axis: axis out of range");
  AxisStrides s{1, x.dim(axis), 1};
  for (size_t i = 0; i < axis; ++i) s.outer *= x.dim(i);
  for (size_t i = axis + 1; i < x.ndim(); ++i) s.inner *= x.dim(i);
  return s;
}
}  // namespace

Tensor softmax_axis(const Tensor& x, size_t axis) {
  require_float(x, "softmax_axis");
  const AxisStrides s = axis_strides(x, axis);
  Tensor y(x.shape());
  for (size_t o = 0; o < s.outer; ++o) {
    for (size_t in = 0; in < s.inner; ++in) {
      const size_t base = o * s.n * s.inner + in;
      double mx = x[base];
      for (size_t c = 1; c < s.n; ++c)
        mx = std::max(mx, x[base + c * s.inner]);
      double denom = 0.0;
      for (size_t c = 0; c < s.n; ++c) {
        double e = std::exp(x[base + c * s.inner] - mx);
        y[base + c * s.inner] = e;
        denom += e;
      }
      for (size_t c = 0; c < s.n; ++c) y[base + c * s.inner] /= denom;
    }
  }
  return y;
}

Tensor softmax_axis_backward(const Tensor& y, const Tensor& dy, size_t axis) {
  if (!y.same_shape(dy)) throw ShapeError("softmax_axis_backward: shapes");
  const AxisStrides s = axis_strides(y, axis);
  Tensor dx(y.shape());
  for (size_t o = 0; o < s.outer; ++o) {
    for (size_t in = 0; in < s.inner; ++in) {
      const size_t base = o * s.n * s.inner + in;
      double dot = 0.0;
      for (size_t c = 0; c < s.n; ++c)
        dot += dy[base + c * s.inner] * y[base + c * s.inner];
      for (size_t c = 0; c < s.n; ++c)
        dx[base + c * s.inner] =
            y[base + c * s.inner] * (dy[base + c * s.inner] - dot);
    }
  }
  return dx;
}

Tensor conv2d_dilated(const Tensor& x, const Tensor& kernel, int dilation) {
  require_float(x, "conv2d_dilated");
  if (x.ndim() != 3 || kernel.ndim() != 4)
    throw ShapeError("conv2d_dilated: x must be 3-D, kernel 4-D");
  const size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const size_t cout = kernel.dim(0), kk = kernel.dim(2);
  if (kernel.dim(1) != cin || kernel.dim(3) != kk)
    throw ShapeError("conv2d_dilated: kernel shape inconsistent with input");
  if (kk % 2 == 0) throw ValueError("conv2d_dilated: kernel size must be odd");
  if (dilation < 1) throw ValueError("conv2d_dilated: dilation must be >= 1");
  const long pad = static_cast<long>(dilation) * (kk - 1) / 2;
  Tensor y({cout, h, w});
  for (size_t co = 0; co < cout; ++co) {
    for (size_t i = 0; i < h; ++i) {
      for (size_t j = 0; j < w; ++j) {
        double acc = 0.0;
        for (size_t ci = 0; ci < cin; ++ci) {
          for (size_t ki = 0; ki < kk; ++ki) {
            const long ii = static_cast<long>(i) - pad +
                            static_cast<long>(ki) * dilation;
            if (ii < 0 || ii >= static_cast<long>(h)) continue;
            for (size_t kj = 0; kj < kk; ++kj) {
              const long jj = static_cast<long>(j) - pad +
                              static_cast<long>(kj) * dilation;
              if (jj < 0 || jj >= static_cast<long>(w)) continue;
              acc += kernel.at(co, ci, ki, kj) * x.at(ci, ii, jj);
            }
          }
        }
        y.at(co, i, j) = acc;
      }
    }
  }
  return y;
}

void conv2d_dilated_backward(const Tensor& x, const Tensor& kernel,
                             int dilation, const Tensor& d_y, Tensor* d_x,
                             Tensor* d_kernel) {
  const size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const size_t cout = kernel.dim(0), kk = kernel.dim(2);
  if (d_y.ndim() != 3 || d_y.dim(0) != cout || d_y.dim(1) != h ||
      d_y.dim(2) != w)
    throw ShapeError("conv2d_dilated_backward: d_y shape");
  const long pad = static_cast<long>(dilation) * (kk - 1) / 2;
  if (d_x) *d_x = Tensor::zeros(x.shape());
  if (d_kernel) *d_kernel = Tensor::zeros(kernel.shape());
  for (size_t co = 0; co < cout; ++co) {
    for (size_t i = 0; i < h; ++i) {
      for (size_t j = 0; j < w; ++j) {
        const double g = d_y.at(co, i, j);
        if (g == 0.0) continue;
        for (size_t ci = 0; ci < cin; ++ci) {
          for (size_t ki = 0; ki < kk; ++ki) {
            const long ii = static_cast<long>(i) - pad +
                            static_cast<long>(ki) * dilation;
            if (ii < 0 || ii >= static_cast<long>(h)) continue;
            for (size_t kj = 0; kj < kk; ++kj) {
              const long jj = static_cast<long>(j) - pad +
                              static_cast<long>(kj) * dilation;
              if (jj < 0 || jj >= static_cast<long>(w)) continue;
              if (d_x) d_x->at(ci, ii, jj) += g * kernel.at(co, ci, ki, kj);
              if (d_kernel) d_kernel->at(co, ci, ki, kj) += g * x.at(ci, ii, jj);
            }
          }
        }
      }
    }
  }
}

Tensor subsample2x(const Tensor& x) {
  if (x.ndim() != 3) throw ShapeError("subsample2x: 3-D required");
  const size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  Tensor y({c, oh, ow});
  for (size_t ci = 0; ci < c; ++ci)
    for (size_t i = 0; i < oh; ++i)
      for (size_t j = 0; j < ow; ++j) y.at(ci, i, j) = x.at(ci, 2 * i, 2 * j);
  return y;
}

Tensor subsample2x_backward(const Tensor& d_y, size_t h, size_t w) {
  const size_t c = d_y.dim(0), oh = d_y.dim(1), ow = d_y.dim(2);
  Tensor d_x = Tensor::zeros({c, h, w});
  for (size_t ci = 0; ci < c; ++ci)
    for (size_t i = 0; i < oh; ++i)
      for (size_t j = 0; j < ow; ++j)
        d_x.at(ci, 2 * i, 2 * j) = d_y.at(ci, i, j);
  return d_x;
}

namespace {
struct Lerp {
  size_t lo, hi;
  double w_hi;  // weight of hi, weight of lo is 1 - w_hi
};
Lerp lerp_coord(size_t out_i, size_t out_n, size_t in_n) {
  const double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
  double src = (static_cast<double>(out_i) + 0.5) * scale - 0.5;
  if (src < 0.0) src = 0.0;
  const double mx = static_cast<double>(in_n - 1);
  if (src > mx) src = mx;
  Lerp l;
  l.lo = static_cast<size_t>(src);
  l.hi = std::min(l.lo + 1, in_n - 1);
  l.w_hi = src - static_cast<double>(l.lo);
  return l;
}
}  // namespace

Tensor bilinear_resize(const Tensor& x, size_t out_h, size_t out_w) {
  if (x.ndim() != 3) throw ShapeError("bilinear_resize: 3-D required");
  const size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor y({c, out_h, out_w});
  for (size_t i = 0; i < out_h; ++i) {
    const Lerp li = lerp_coord(i, out_h, h);
    for (size_t j = 0; j < out_w; ++j) {
      const Lerp lj = lerp_coord(j, out_w, w);
      for (size_t ci = 0; ci < c; ++ci) {
        const double top = x.at(ci, li.lo, lj.lo) * (1.0 - lj.w_hi) +
                           x.at(ci, li.lo, lj.hi) * lj.w_hi;
        const double bot = x.at(ci, li.hi, lj.lo) * (1.0 - lj.w_hi) +
                           x.at(ci, li.hi, lj.hi) * lj.w_hi;
        y.at(ci, i, j) = top * (1.0 - li.w_hi) + bot * li.w_hi;
      }
    }
  }
  return y;
}

Tensor bilinear_resize_backward(const Tensor& d_y, size_t in_h, size_t in_w) {
  const size_t c = d_y.dim(0), oh = d_y.dim(1), ow = d_y.dim(2);
  Tensor d_x = Tensor::zeros({c, in_h, in_w});
  for (size_t i = 0; i < oh; ++i) {
    const Lerp li = lerp_coord(i, oh, in_h);
    for (size_t j = 0; j < ow; ++j) {
      const Lerp lj = lerp_coord(j, ow, in_w);
      for (size_t ci = 0; ci < c; ++ci) {
        const double g = d_y.at(ci, i, j);
        d_x.at(ci, li.lo, lj.lo) += g * (1.0 - li.w_hi) * (1.0 - lj.w_hi);
        d_x.at(ci, li.lo, lj.hi) += g * (1.0 - li.w_hi) * lj.w_hi;
        d_x.at(ci, li.hi, lj.lo) += g * li.w_hi * (1.0 - lj.w_hi);
        d_x.at(ci, li.hi, lj.hi) += g * li.w_hi * lj.w_hi;
      }
    }
  }
  return d_x;
}

}  // namespace hcnet
