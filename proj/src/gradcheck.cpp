#include "hcnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace hcnet {

GradcheckReport gradcheck(const DiffOp& op, const std::vector<Tensor>& inputs,
                          double eps, double tol, size_t max_coords_per_input,
                          uint64_t sample_seed) {
  for (const Tensor& t : inputs)
    if (t.dtype() != DType::f64)
      throw ValueError("gradcheck: float64 inputs required");

  std::vector<Tensor> analytic = op.backward(inputs);
  if (analytic.size() != inputs.size())
    throw ValueError("gradcheck: backward returned wrong gradient count");

  GradcheckReport rep;
  rep.tol = tol;
  std::vector<Tensor> work = inputs;
  Rng pick(sample_seed ^ 0x5eedf00dULL);

  for (size_t t = 0; t < inputs.size(); ++t) {
    if (!analytic[t].same_shape(inputs[t]))
      throw ShapeError("gradcheck: gradient shape mismatch for input " +
                       std::to_string(t));
    const size_t n = inputs[t].numel();
    std::vector<size_t> coords;
    if (max_coords_per_input == 0 || n <= max_coords_per_input) {
      coords.resize(n);
      for (size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (size_t i = 0; i < max_coords_per_input; ++i)
        coords.push_back(pick.uniform_int(n));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (size_t c : coords) {
      const double orig = work[t][c];
      work[t][c] = orig + eps;
      const double fp = sum_all(op.forward(work));
      work[t][c] = orig - eps;
      const double fm = sum_all(op.forward(work));
      work[t][c] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("gradcheck: non-finite forward value in " + op.name);
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[t][c];
      if (!std::isfinite(a))
        throw NumericError("gradcheck: non-finite analytic gradient in " +
                           op.name);
      const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
      const double rel = std::fabs(a - numeric) / denom;
      ++rep.coords_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_input = t;
        rep.worst_coord = c;
      }
    }
  }
  rep.passed = rep.max_rel_err <= tol;
  return rep;
}

}  // namespace hcnet
