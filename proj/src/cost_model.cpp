#include "hcnet/cost_model.hpp"

#include <numeric>
#include <sstream>

#include "hcnet/pcm.hpp"
#include "hcnet/piam.hpp"
#include "hcnet/rcm.hpp"

namespace hcnet {

namespace {
void require_c4(size_t c) {
  if (c == 0 || c % 4 != 0)
    throw ValueError("cost model: channels must be positive and divisible by 4");
}
}  // namespace

CostComponents count_dense(size_t h, size_t w, size_t c) {
  require_c4(c);
  const uint64_t k = static_cast<uint64_t>(h) * w;
  const uint64_t cq = c / 4;
  CostComponents cc;
  cc.projections = 2 * cq * c * k;
  cc.correlation = cq * k * k;
  cc.aggregation = static_cast<uint64_t>(c) * k * k;
  cc.residual = static_cast<uint64_t>(c) * k;
  cc.total = cc.projections + cc.correlation + cc.aggregation + cc.residual;
  cc.attn_bytes = 4 * k * k;
  return cc;
}

HierCost count_hier(const std::vector<size_t>& region_sizes, size_t n,
                    size_t c, size_t h, size_t w) {
  require_c4(c);
  const uint64_t hw = static_cast<uint64_t>(h) * w;
  const uint64_t sum =
      std::accumulate(region_sizes.begin(), region_sizes.end(), uint64_t{0});
  if (sum != hw)
    throw ValueError("count_hier: region sizes sum to " + std::to_string(sum) +
                     ", expected " + std::to_string(hw));
  const uint64_t cq = c / 4;

  HierCost hc;
  uint64_t sum_k2 = 0;
  for (size_t ki : region_sizes) {
    if (ki == 0) continue;  // skipped regions cost nothing
    const uint64_t k = ki;
    hc.pcm.projections += 2 * cq * c * k;
    hc.pcm.correlation += cq * k * k;
    hc.pcm.aggregation += static_cast<uint64_t>(c) * k * k;
    hc.pcm.residual += static_cast<uint64_t>(c) * k;
    sum_k2 += k * k;
  }
  hc.pcm.total = hc.pcm.projections + hc.pcm.correlation + hc.pcm.aggregation +
                 hc.pcm.residual;
  hc.pcm.attn_bytes = 4 * sum_k2;

  const uint64_t nn = n;
  hc.rcm.pool_unpool = 2 * hw * nn * c;
  hc.rcm.projections = 2 * cq * c * nn;
  hc.rcm.correlation = cq * nn * nn;
  hc.rcm.aggregation = static_cast<uint64_t>(c) * nn * nn;
  hc.rcm.residual = static_cast<uint64_t>(c) * nn;
  hc.rcm.total = hc.rcm.pool_unpool + hc.rcm.projections + hc.rcm.correlation +
                 hc.rcm.aggregation + hc.rcm.residual;
  hc.rcm.attn_bytes = 4 * nn * nn;

  hc.total = hc.pcm.total + hc.rcm.total;
  hc.attn_bytes = hc.pcm.attn_bytes + hc.rcm.attn_bytes;
  return hc;
}

CostReport make_cost_report(size_t h, size_t w, size_t c,
                            const std::vector<size_t>& region_sizes,
                            size_t n) {
  const CostComponents dense = count_dense(h, w, c);
  const HierCost hier = count_hier(region_sizes, n, c, h, w);
  CostReport r;
  r.macs_dense = dense.total;
  r.macs_pcm = hier.pcm.total;
  r.macs_rcm = hier.rcm.total;
  r.macs_total = hier.total;
  r.bytes_attn_dense = dense.attn_bytes;
  r.bytes_attn_hier = hier.attn_bytes;
  r.ratio = static_cast<double>(r.macs_total) / static_cast<double>(r.macs_dense);
  return r;
}

std::vector<size_t> balanced_partition(size_t total, size_t n) {
  if (n == 0 || n > total)
    throw ValueError("balanced_partition: need 1 <= n <= total");
  std::vector<size_t> sizes(n, total / n);
  for (size_t i = 0; i < total % n; ++i) ++sizes[i];
  return sizes;
}

std::vector<size_t> random_partition(size_t total, size_t n, Rng& rng) {
  if (n == 0 || n > total)
    throw ValueError("random_partition: need 1 <= n <= total");
  // n-1 cut points over [0, total]
  std::vector<size_t> cuts;
  for (size_t i = 0; i + 1 < n; ++i)
    cuts.push_back(static_cast<size_t>(rng.uniform_int(total + 1)));
  cuts.push_back(0);
  cuts.push_back(total);
  std::sort(cuts.begin(), cuts.end());
  std::vector<size_t> sizes;
  for (size_t i = 0; i + 1 < cuts.size(); ++i)
    sizes.push_back(cuts[i + 1] - cuts[i]);
  return sizes;
}

VerifyReport verify_counts(size_t h, size_t w, size_t c, size_t n,
                           const std::vector<size_t>& region_sizes, Rng& rng) {
  require_c4(c);
  VerifyReport rep;
  const uint64_t hw = static_cast<uint64_t>(h) * w;

  PiamParams params = PiamParams::init(c, rng);
  params.alpha = rng.uniform(-0.5, 0.5);
  const Tensor x = rng.tensor_uniform({c, h, w}, -1.0, 1.0);

  // dense: one PiAM over the flattened map
  rep.analytic_dense = count_dense(h, w, c).total;
  macs::reset();
  macs::enable();
  (void)piam_forward(x.reshaped({c, hw}), params);
  macs::disable();
  rep.instrumented_dense = macs::count();

  // hier: PCM over the partition + RCM over a matching soft Q
  Tensor t({h, w}, DType::u16);
  {
    size_t p = 0;
    for (size_t cls = 0; cls < region_sizes.size(); ++cls)
      for (size_t k = 0; k < region_sizes[cls]; ++k) t[p++] = double(cls);
    if (p != hw) throw ValueError("verify_counts: partition sum mismatch");
  }
  Tensor q({n, h, w});
  for (size_t pix = 0; pix < hw; ++pix) {
    double s = 0.0;
    for (size_t j = 0; j < n; ++j) {
      const double v = 0.1 + rng.uniform();
      q[j * hw + pix] = v;
      s += v;
    }
    for (size_t j = 0; j < n; ++j) q[j * hw + pix] /= s;
  }

  rep.analytic_hier = count_hier(region_sizes, n, c, h, w).total;
  macs::reset();
  macs::enable();
  PcmForwardResult pr = pcm_forward(x, t, params);
  (void)rcm_forward(pr.out, q, params);
  macs::disable();
  rep.instrumented_hier = macs::count();

  rep.match = rep.analytic_dense == rep.instrumented_dense &&
              rep.analytic_hier == rep.instrumented_hier;
  if (!rep.match) {
    std::ostringstream os;
    os << "dense analytic=" << rep.analytic_dense
       << " instrumented=" << rep.instrumented_dense
       << "; hier analytic=" << rep.analytic_hier
       << " instrumented=" << rep.instrumented_hier;
    rep.detail = os.str();
  }
  return rep;
}

}  // namespace hcnet
