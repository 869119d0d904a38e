#include "hcnet/objective.hpp"

#include <algorithm>
#include <cmath>

namespace hcnet {

ClassWeights median_frequency_weights(const std::vector<uint64_t>& counts) {
  uint64_t total = 0;
  for (uint64_t c : counts) total += c;
  if (total == 0)
    throw ValueError("median_frequency_weights: all counts are zero");

  // f_median / f_i == median_count / count_i; working on the raw counts
  // keeps the hand-derivable ratios exact in floating point
  std::vector<uint64_t> sorted;
  for (uint64_t c : counts)
    if (c > 0) sorted.push_back(c);
  std::sort(sorted.begin(), sorted.end());
  const size_t m = sorted.size();
  const double c_median =
      (m % 2 == 1) ? static_cast<double>(sorted[m / 2])
                   : 0.5 * (static_cast<double>(sorted[m / 2 - 1]) +
                            static_cast<double>(sorted[m / 2]));

  ClassWeights cw;
  cw.n = counts;
  cw.w.resize(counts.size(), 0.0);
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    cw.w[i] = c_median / static_cast<double>(counts[i]);
  }
  return cw;
}

namespace {
void check_py(const Tensor& p, const Tensor& y, size_t n_classes) {
  if (p.ndim() != 3) throw ShapeError("weighted_ce: p must be N x H x W");
  if (y.ndim() != 2 || y.dim(0) != p.dim(1) || y.dim(1) != p.dim(2))
    throw ShapeError("weighted_ce: y must be H x W matching p");
  (void)n_classes;
}
size_t label_at(const Tensor& y, size_t pix, size_t n) {
  const double v = y[pix];
  const long c = static_cast<long>(v);
  if (c < 0 || static_cast<size_t>(c) >= n || static_cast<double>(c) != v)
    throw ValueError("weighted_ce: label out of range at pixel " +
                     std::to_string(pix));
  return static_cast<size_t>(c);
}
}  // namespace

CeResult weighted_ce(const Tensor& p, const Tensor& y, const ClassWeights& w,
                     double eps_log) {
  check_py(p, y, w.w.size());
  const size_t n = p.dim(0), hw = p.dim(1) * p.dim(2);
  if (w.w.size() < n) throw ShapeError("weighted_ce: weight vector too short");

  CeResult res;
  res.d_p = Tensor::zeros(p.shape());
  double acc = 0.0;
  for (size_t pix = 0; pix < hw; ++pix) {
    const size_t c = label_at(y, pix, n);
    const double wy = w.w[c];
    // clamp instead of shifting so exact probabilities give exact losses
    const double py = std::max(p[c * hw + pix], eps_log);
    acc += -wy * std::log(py);
    res.d_p[c * hw + pix] = -wy / (py * static_cast<double>(hw));
  }
  res.loss = acc / static_cast<double>(hw);
  return res;
}

Tensor softmax_ce_logit_grad(const Tensor& p, const Tensor& y,
                             const ClassWeights& w) {
  check_py(p, y, w.w.size());
  const size_t n = p.dim(0), hw = p.dim(1) * p.dim(2);
  Tensor g(p.shape());
  for (size_t pix = 0; pix < hw; ++pix) {
    const size_t yc = label_at(y, pix, n);
    const double wy = w.w[yc];
    for (size_t c = 0; c < n; ++c) {
      const double onehot = (c == yc) ? 1.0 : 0.0;
      g[c * hw + pix] =
          wy * (p[c * hw + pix] - onehot) / static_cast<double>(hw);
    }
  }
  return g;
}

double total_loss(double l_context, double l_prior, double lambda) {
  if (!std::isfinite(l_context) || !std::isfinite(l_prior))
    throw NumericError("total_loss: non-finite input");
  if (lambda < 0) throw ValueError("total_loss: lambda must be >= 0");
  return l_context + lambda * l_prior;
}

}  // namespace hcnet
