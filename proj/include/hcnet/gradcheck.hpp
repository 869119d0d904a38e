#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hcnet/tensor.hpp"

namespace hcnet {

// Differentiable operation handle for the finite-difference harness.
// `forward` maps the inputs to an output tensor; `backward` returns the
// analytic gradient of sum(forward(inputs)) with respect to each input.
struct DiffOp {
  std::string name;
  std::function<Tensor(const std::vector<Tensor>&)> forward;
  std::function<std::vector<Tensor>(const std::vector<Tensor>&)> backward;
};

struct GradcheckReport {
  double max_rel_err = 0.0;
  size_t worst_input = 0;
  size_t worst_coord = 0;
  size_t coords_checked = 0;
  bool passed = false;
  double tol = 0.0;
};

// Central differences (f(x+eps) - f(x-eps)) / (2 eps) per coordinate of the
// scalarized (summed) output. Relative error uses
// |analytic - numeric| / max(1, |analytic|, |numeric|).
// max_coords_per_input = 0 checks every coordinate; otherwise that many
// coordinates are sampled per input, deterministically from sample_seed.
GradcheckReport gradcheck(const DiffOp& op, const std::vector<Tensor>& inputs,
                          double eps = 1e-5, double tol = 1e-4,
                          size_t max_coords_per_input = 0,
                          uint64_t sample_seed = 0);

}  // namespace hcnet
