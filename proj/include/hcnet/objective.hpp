#pragma once

#include <cstdint>
#include <vector>

#include "hcnet/tensor.hpp"

namespace hcnet {

struct ClassWeights {
  std::vector<double> w;     // per-class weight; 0 for absent classes
  std::vector<uint64_t> n;   // pixel counts the weights were derived from
};

// w_i = f_median / f_i with f_i = n_i / sum(n). Zero-count classes are
// excluded from the median and get weight 0. Even count: mean of the two
// middle frequencies.
ClassWeights median_frequency_weights(const std::vector<uint64_t>& counts);

struct CeResult {
  double loss = 0.0;
  Tensor d_p;  // gradient of the loss with respect to p
};

// Mean over pixels of -w_y * log(p_y + eps_log). p: N x H x W pixel-
// normalized probabilities; y: H x W integer labels.
CeResult weighted_ce(const Tensor& p, const Tensor& y, const ClassWeights& w,
                     double eps_log = 1e-12);

// Fused softmax + weighted-CE gradient with respect to the logits:
// per pixel (w_y / num_pixels) * (p - onehot_y). p must be the softmax of
// the logits being differentiated.
Tensor softmax_ce_logit_grad(const Tensor& p, const Tensor& y,
                             const ClassWeights& w);

double total_loss(double l_context, double l_prior, double lambda = 0.8);

}  // namespace hcnet
