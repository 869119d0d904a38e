#include "hcnet/piam.hpp"

#include <cmath>

#include "hcnet/ops.hpp"

namespace hcnet {

PiamParams PiamParams::init(size_t channels, Rng& rng) {
  if (channels % 4 != 0)
    throw ValueError("PiamParams: channels must be divisible by 4");
  PiamParams p;
  const double s = std::sqrt(1.0 / static_cast<double>(channels));
  p.w_o = rng.tensor_uniform({channels / 4, channels}, -s, s);
  p.w_p = rng.tensor_uniform({channels / 4, channels}, -s, s);
  p.alpha = 0.0;
  return p;
}

void PiamParams::validate(size_t channels) const {
  if (channels % 4 != 0)
    throw ValueError("piam: channels must be divisible by 4");
  if (w_o.ndim() != 2 || w_o.dim(0) != channels / 4 || w_o.dim(1) != channels)
    throw ShapeError("piam: w_o must be C/4 x C, got " + w_o.shape_str());
  if (w_p.ndim() != 2 || w_p.dim(0) != channels / 4 || w_p.dim(1) != channels)
    throw ShapeError("piam: w_p must be C/4 x C, got " + w_p.shape_str());
}

Tensor correlate(const Tensor& o, const Tensor& p) {
  if (o.ndim() != 2 || !o.same_shape(p))
    throw ShapeError("correlate: O and P must be equal 2-D shapes");
  return matmul(transpose2d(o), p);
}

NraResult nra_normalize_full(const Tensor& a, double eps) {
  if (a.ndim() != 2 || a.dim(0) != a.dim(1))
    throw ShapeError("nra_normalize: square matrix required");
  const size_t k = a.dim(0);
  NraResult r;
  r.a = Tensor(a.shape());
  r.row_sums.resize(k);
  r.fallback.assign(k, 0);
  for (size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < k; ++j) s += a.at(i, j);
    r.row_sums[i] = s;
    if (std::fabs(s) < eps) {
      r.fallback[i] = 1;
      const double u = 1.0 / static_cast<double>(k);
      for (size_t j = 0; j < k; ++j) r.a.at(i, j) = u;
    } else {
      for (size_t j = 0; j < k; ++j) r.a.at(i, j) = a.at(i, j) / s;
    }
  }
  return r;
}

Tensor nra_normalize(const Tensor& a, double eps) {
  return nra_normalize_full(a, eps).a;
}

PiamForwardResult piam_forward(const Tensor& b, const PiamParams& params,
                               double eps) {
  if (b.ndim() != 2) throw ShapeError("piam_forward: B must be C x K");
  const size_t c = b.dim(0), k = b.dim(1);
  params.validate(c);

  PiamForwardResult res;
  PiamCache& cc = res.cache;
  cc.b = b;
  cc.o = matmul(params.w_o, b);  // C/4 x K
  cc.p = matmul(params.w_p, b);
  cc.nra = nra_normalize_full(correlate(cc.o, cc.p), eps);

  // U[:,i] = sum_j B[:,j] * A[i,j]  (B * A^T)
  cc.u = matmul(b, transpose2d(cc.nra.a));

  res.out = Tensor({c, k});
  for (size_t i = 0; i < res.out.numel(); ++i)
    res.out[i] = params.alpha * cc.u[i] + b[i];
  macs::add(static_cast<uint64_t>(c) * k);  // residual term
  return res;
}

PiamGrads piam_backward(const PiamCache& cache, const PiamParams& params,
                        const Tensor& d_out) {
  const Tensor& b = cache.b;
  if (!d_out.same_shape(b)) throw ShapeError("piam_backward: d_out shape");
  const size_t k = b.dim(1);

  PiamGrads g;
  g.d_alpha = dot_all(d_out, cache.u);
  g.d_b = d_out;  // residual path
  const Tensor d_u = scale(d_out, params.alpha);

  // U = B * A^T
  Tensor d_a = matmul(transpose2d(d_u), b);        // K x K
  g.d_b = add(g.d_b, matmul(d_u, cache.nra.a));    // dB += dU * A

  // NRA quotient rule; fallback rows are constant in the inputs.
  Tensor d_a_raw = Tensor::zeros(d_a.shape());
  for (size_t i = 0; i < k; ++i) {
    if (cache.nra.fallback[i]) continue;
    const double s = cache.nra.row_sums[i];
    double acc = 0.0;
    for (size_t j = 0; j < k; ++j) acc += d_a.at(i, j) * cache.nra.a.at(i, j);
    for (size_t j = 0; j < k; ++j)
      d_a_raw.at(i, j) = (d_a.at(i, j) - acc) / s;
  }

  // A_raw = O^T * P
  const Tensor d_o = matmul(cache.p, transpose2d(d_a_raw));
  const Tensor d_p = matmul(cache.o, d_a_raw);

  // O = w_o * B, P = w_p * B
  g.d_w_o = matmul(d_o, transpose2d(b));
  g.d_w_p = matmul(d_p, transpose2d(b));
  g.d_b = add(g.d_b, matmul(transpose2d(params.w_o), d_o));
  g.d_b = add(g.d_b, matmul(transpose2d(params.w_p), d_p));
  return g;
}

void PiamGrads::accumulate(const PiamGrads& other) {
  if (d_b.numel() == 0) {
    *this = other;
    return;
  }
  d_w_o = add(d_w_o, other.d_w_o);
  d_w_p = add(d_w_p, other.d_w_p);
  d_alpha += other.d_alpha;
}

uint64_t piam_mac_count(size_t c, size_t k) {
  const uint64_t cq = c / 4;
  return 2 * cq * c * k + cq * k * k + c * k * k + c * k;
}

}  // namespace hcnet
