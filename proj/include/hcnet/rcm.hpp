#pragma once

#include "hcnet/piam.hpp"
#include "hcnet/tensor.hpp"

namespace hcnet {

// Soft region pooling: R[:,j] is the Q-weighted mean of X over pixels,
// column j scaled by 1 / (sum_k Q[j,k] + eps).
Tensor region_pool(const Tensor& x, const Tensor& q, double eps = 1e-8);

// Each pixel's feature is the Q-weighted combination of region columns:
// X''[:,p] = R * Q[:,p].
Tensor region_unpool(const Tensor& r, const Tensor& q);

struct RcmCache {
  Tensor x, q;                    // inputs
  Tensor pooled_raw;              // X_flat * Q_flat^T before scaling (C x N)
  std::vector<double> inv_denom;  // 1 / (row sum of Q + eps) per region
  Tensor r;                       // pooled region features C x N
  PiamCache piam;
  Tensor r_prime;  // PiAM output C x N
  double eps_pool = 0.0;
};

struct RcmForwardResult {
  Tensor out;  // C x H x W
  RcmCache cache;
};

RcmForwardResult rcm_forward(const Tensor& x, const Tensor& q,
                             const PiamParams& params, double eps_pool = 1e-8,
                             double eps_nra = 1e-8);

struct RcmGrads {
  Tensor d_x, d_q;
  Tensor d_w_o, d_w_p;
  double d_alpha = 0.0;
};

RcmGrads rcm_backward(const RcmCache& cache, const PiamParams& params,
                      const Tensor& d_out);

}  // namespace hcnet
