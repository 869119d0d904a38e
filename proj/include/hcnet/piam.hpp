#pragma once

#include <vector>

#include "hcnet/tensor.hpp"

namespace hcnet {

// Attention over an unordered feature set B (C x K): raw correlation
// between two quarter-channel projections, row-sum normalization, and an
// alpha-gated residual update.
struct PiamParams {
  Tensor w_o;  // C/4 x C
  Tensor w_p;  // C/4 x C
  double alpha = 0.0;

  static PiamParams init(size_t channels, Rng& rng);
  void validate(size_t channels) const;
};

// A[i,j] = dot(O[:,i], P[:,j]), i.e. O^T * P.
Tensor correlate(const Tensor& o, const Tensor& p);

struct NraResult {
  Tensor a;                       // row-normalized K x K
  std::vector<double> row_sums;   // raw row sums
  std::vector<uint8_t> fallback;  // rows replaced by the uniform row
};

// Divides each row by its sum. Rows with |sum| < eps become uniform 1/K and
// carry no gradient through the attention path.
NraResult nra_normalize_full(const Tensor& a, double eps = 1e-8);
Tensor nra_normalize(const Tensor& a, double eps = 1e-8);

struct PiamCache {
  Tensor b, o, p;
  NraResult nra;
  Tensor u;  // aggregated update B * A^T
};

struct PiamForwardResult {
  Tensor out;  // alpha * U + B
  PiamCache cache;
};

PiamForwardResult piam_forward(const Tensor& b, const PiamParams& params,
                               double eps = 1e-8);

struct PiamGrads {
  Tensor d_b, d_w_o, d_w_p;
  double d_alpha = 0.0;

  void accumulate(const PiamGrads& other);
};

PiamGrads piam_backward(const PiamCache& cache, const PiamParams& params,
                        const Tensor& d_out);

// Counted MACs of one forward pass under the cost-model convention:
// 2*(C/4)*C*K projections + (C/4)*K^2 correlation + C*K^2 aggregation
// + C*K residual.
uint64_t piam_mac_count(size_t channels, size_t k);

}  // namespace hcnet
