#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hcnet/tensor.hpp"

namespace hcnet {

// MAC convention: one multiply-accumulate = 1. NRA divisions, softmax
// exponentials, and pooling denominators are not counted. Memory metric is
// the bytes of materialized float32 attention matrices.
struct CostComponents {
  uint64_t projections = 0;
  uint64_t correlation = 0;
  uint64_t aggregation = 0;
  uint64_t residual = 0;
  uint64_t pool_unpool = 0;
  uint64_t total = 0;
  uint64_t attn_bytes = 0;
};

// Dense PiAM over the full map (K = HW).
CostComponents count_dense(size_t h, size_t w, size_t c);

struct HierCost {
  CostComponents pcm;
  CostComponents rcm;
  uint64_t total = 0;
  uint64_t attn_bytes = 0;
};

// PCM over the given partition plus RCM pooling/attention/unpooling.
HierCost count_hier(const std::vector<size_t>& region_sizes, size_t n,
                    size_t c, size_t h, size_t w);

struct CostReport {
  uint64_t macs_dense = 0;
  uint64_t macs_pcm = 0;
  uint64_t macs_rcm = 0;
  uint64_t macs_total = 0;
  uint64_t bytes_attn_dense = 0;
  uint64_t bytes_attn_hier = 0;
  double ratio = 0.0;  // macs_total / macs_dense
};

CostReport make_cost_report(size_t h, size_t w, size_t c,
                            const std::vector<size_t>& region_sizes, size_t n);

std::vector<size_t> balanced_partition(size_t total, size_t n);
std::vector<size_t> random_partition(size_t total, size_t n, Rng& rng);

struct VerifyReport {
  uint64_t analytic_dense = 0, instrumented_dense = 0;
  uint64_t analytic_hier = 0, instrumented_hier = 0;
  bool match = false;
  std::string detail;
};

// Runs the real PiAM / PCM / RCM kernels with the MAC counter enabled and
// compares against the analytic formulas.
VerifyReport verify_counts(size_t h, size_t w, size_t c, size_t n,
                           const std::vector<size_t>& region_sizes, Rng& rng);

}  // namespace hcnet
