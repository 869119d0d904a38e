#include "hcnet/preseg.hpp"

#include <cmath>

#include "hcnet/ops.hpp"

namespace hcnet {

PresegParams PresegParams::init(size_t cin, int num_classes, Rng& rng) {
  if (num_classes < 2) throw ValueError("preseg: need >= 2 classes");
  PresegParams p;
  const size_t bc = kBranchChannels;
  const double s_branch = std::sqrt(1.0 / static_cast<double>(cin * 9));
  p.k1 = rng.tensor_uniform({bc, cin, 3, 3}, -s_branch, s_branch);
  p.k3 = rng.tensor_uniform({bc, cin, 3, 3}, -s_branch, s_branch);
  p.k5 = rng.tensor_uniform({bc, cin, 3, 3}, -s_branch, s_branch);
  const double s_head = std::sqrt(1.0 / static_cast<double>(bc));
  p.head = rng.tensor_uniform({static_cast<size_t>(num_classes), bc, 1, 1},
                              -s_head, s_head);
  p.num_classes = num_classes;
  return p;
}

void PresegParams::validate(size_t cin) const {
  const size_t bc = kBranchChannels;
  for (const Tensor* k : {&k1, &k3, &k5}) {
    if (k->ndim() != 4 || k->dim(0) != bc || k->dim(1) != cin ||
        k->dim(2) != 3 || k->dim(3) != 3)
      throw ShapeError("preseg: branch kernel must be 64 x Cin x 3 x 3, got " +
                       k->shape_str());
  }
  if (head.ndim() != 4 || head.dim(0) != static_cast<size_t>(num_classes) ||
      head.dim(1) != bc || head.dim(2) != 1 || head.dim(3) != 1)
    throw ShapeError("preseg: head must be N x 64 x 1 x 1, got " +
                     head.shape_str());
}

PresegForwardResult preseg_forward(const Tensor& f,
                                   const PresegParams& params) {
  if (f.ndim() != 3) throw ShapeError("preseg_forward: F must be Cin x H x W");
  params.validate(f.dim(0));
  const size_t h = f.dim(1), w = f.dim(2);
  const size_t bc = PresegParams::kBranchChannels;
  const size_t n = static_cast<size_t>(params.num_classes);

  PresegForwardResult res;
  PresegCache& cc = res.cache;
  cc.f = f;
  cc.summed = conv2d_dilated(f, params.k1, 1);
  cc.summed = add(cc.summed, conv2d_dilated(f, params.k3, 3));
  cc.summed = add(cc.summed, conv2d_dilated(f, params.k5, 5));

  // 1x1 head as a matmul over flattened pixels
  const Tensor head2d = params.head.reshaped({n, bc});
  const Tensor s_flat = cc.summed.reshaped({bc, h * w});
  cc.logits = matmul(head2d, s_flat).reshaped({n, h, w});
  cc.q = softmax_axis(cc.logits, 0);
  res.q = cc.q;
  return res;
}

Tensor partition(const Tensor& q) {
  if (q.ndim() != 3) throw ShapeError("partition: Q must be N x H x W");
  const size_t n = q.dim(0), h = q.dim(1), w = q.dim(2);
  Tensor t({h, w}, DType::u16);
  for (size_t i = 0; i < h; ++i) {
    for (size_t j = 0; j < w; ++j) {
      size_t best = 0;
      double bv = q.at(0, i, j);
      for (size_t c = 1; c < n; ++c) {
        const double v = q.at(c, i, j);
        if (v > bv) {
          bv = v;
          best = c;
        }
      }
      t.at(i, j) = static_cast<double>(best);
    }
  }
  return t;
}

PresegGrads preseg_backward(const PresegCache& cache,
                            const PresegParams& params, const Tensor* d_q,
                            const Tensor* d_logits_extra) {
  const size_t h = cache.f.dim(1), w = cache.f.dim(2);
  const size_t bc = PresegParams::kBranchChannels;
  const size_t n = static_cast<size_t>(params.num_classes);

  Tensor d_logits = Tensor::zeros(cache.logits.shape());
  if (d_q) {
    if (!d_q->same_shape(cache.q))
      throw ShapeError("preseg_backward: d_q shape");
    d_logits = softmax_axis_backward(cache.q, *d_q, 0);
  }
  if (d_logits_extra) {
    if (!d_logits_extra->same_shape(cache.logits))
      throw ShapeError("preseg_backward: d_logits shape");
    d_logits = add(d_logits, *d_logits_extra);
  }

  const Tensor head2d = params.head.reshaped({n, bc});
  const Tensor d_logits_flat = d_logits.reshaped({n, h * w});
  const Tensor s_flat = cache.summed.reshaped({bc, h * w});

  PresegGrads g;
  g.d_head = matmul(d_logits_flat, transpose2d(s_flat)).reshaped({n, bc, 1, 1});
  const Tensor d_summed =
      matmul(transpose2d(head2d), d_logits_flat).reshaped({bc, h, w});

  Tensor d_f1, d_f3, d_f5;
  conv2d_dilated_backward(cache.f, params.k1, 1, d_summed, &d_f1, &g.d_k1);
  conv2d_dilated_backward(cache.f, params.k3, 3, d_summed, &d_f3, &g.d_k3);
  conv2d_dilated_backward(cache.f, params.k5, 5, d_summed, &d_f5, &g.d_k5);
  g.d_f = add(add(d_f1, d_f3), d_f5);
  return g;
}

}  // namespace hcnet
