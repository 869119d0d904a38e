#include "hcnet/pcm.hpp"

namespace hcnet {

std::vector<size_t> RegionIndex::sizes() const {
  std::vector<size_t> s;
  s.reserve(pixels.size());
  for (const auto& p : pixels) s.push_back(p.size());
  return s;
}

RegionIndex build_region_index(const Tensor& t, int n) {
  if (t.ndim() != 2) throw ShapeError("build_region_index: T must be H x W");
  if (n < 1) throw ValueError("build_region_index: n must be >= 1");
  RegionIndex idx;
  idx.pixels.resize(static_cast<size_t>(n));
  const size_t total = t.numel();
  for (size_t p = 0; p < total; ++p) {
    const double v = t[p];
    const long cls = static_cast<long>(v);
    if (cls < 0 || cls >= n || static_cast<double>(cls) != v)
      throw ValueError("build_region_index: label " + std::to_string(v) +
                       " out of range [0," + std::to_string(n) + ") at pixel " +
                       std::to_string(p));
    idx.pixels[static_cast<size_t>(cls)].push_back(
        static_cast<uint32_t>(p));
  }
  return idx;
}

Tensor gather_region(const Tensor& x, const std::vector<uint32_t>& pixels) {
  if (x.ndim() != 3) throw ShapeError("gather_region: X must be C x H x W");
  const size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  Tensor b({c, pixels.size()});
  for (size_t ci = 0; ci < c; ++ci) {
    const double* row = x.data() + ci * hw;
    for (size_t k = 0; k < pixels.size(); ++k) b.at(ci, k) = row[pixels[k]];
  }
  return b;
}

void scatter_region(Tensor& x, const std::vector<uint32_t>& pixels,
                    const Tensor& b) {
  const size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  if (b.ndim() != 2 || b.dim(0) != c || b.dim(1) != pixels.size())
    throw ShapeError("scatter_region: B shape mismatch");
  for (size_t ci = 0; ci < c; ++ci) {
    double* row = x.data() + ci * hw;
    for (size_t k = 0; k < pixels.size(); ++k) row[pixels[k]] = b.at(ci, k);
  }
}

PcmForwardResult pcm_forward(const Tensor& x, const Tensor& t,
                             const PiamParams& params, double eps) {
  if (x.ndim() != 3) throw ShapeError("pcm_forward: X must be C x H x W");
  if (t.ndim() != 2 || t.dim(0) != x.dim(1) || t.dim(1) != x.dim(2))
    throw ShapeError("pcm_forward: T must be H x W matching X");
  params.validate(x.dim(0));

  PcmForwardResult res;
  res.out = x;
  PcmCache& cc = res.cache;
  cc.channels = x.dim(0);
  cc.height = x.dim(1);
  cc.width = x.dim(2);

  // region count = max label + 1; callers with fixed N should pass T whose
  // labels already lie in [0, N)
  int max_label = 0;
  for (size_t p = 0; p < t.numel(); ++p)
    max_label = std::max(max_label, static_cast<int>(t[p]));
  cc.index = build_region_index(t, max_label + 1);

  for (size_t cls = 0; cls < cc.index.pixels.size(); ++cls) {
    const auto& pix = cc.index.pixels[cls];
    if (pix.empty()) continue;
    const Tensor b = gather_region(x, pix);
    PiamForwardResult r = piam_forward(b, params, eps);
    scatter_region(res.out, pix, r.out);
    cc.region_class.push_back(static_cast<int>(cls));
    cc.piam_caches.push_back(std::move(r.cache));
  }
  return res;
}

PcmGrads pcm_backward(const PcmCache& cache, const PiamParams& params,
                      const Tensor& d_out) {
  if (d_out.ndim() != 3 || d_out.dim(0) != cache.channels ||
      d_out.dim(1) != cache.height || d_out.dim(2) != cache.width)
    throw ShapeError("pcm_backward: d_out shape mismatch with cache");

  PcmGrads g;
  g.d_x = Tensor::zeros(d_out.shape());
  g.d_w_o = Tensor::zeros(params.w_o.shape());
  g.d_w_p = Tensor::zeros(params.w_p.shape());

  // ascending class order keeps parameter accumulation deterministic
  for (size_t r = 0; r < cache.region_class.size(); ++r) {
    const auto& pix = cache.index.pixels[cache.region_class[r]];
    const Tensor d_b_out = gather_region(d_out, pix);
    PiamGrads pg = piam_backward(cache.piam_caches[r], params, d_b_out);
    scatter_region(g.d_x, pix, pg.d_b);
    g.d_w_o = add(g.d_w_o, pg.d_w_o);
    g.d_w_p = add(g.d_w_p, pg.d_w_p);
    g.d_alpha += pg.d_alpha;
  }
  return g;
}

}  // namespace hcnet
