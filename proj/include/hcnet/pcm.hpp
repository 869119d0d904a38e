#pragma once

#include <vector>

#include "hcnet/piam.hpp"
#include "hcnet/tensor.hpp"

namespace hcnet {

// Per class: ascending flat (row-major) pixel indices whose partition label
// is that class. Lists are disjoint and cover every pixel.
struct RegionIndex {
  std::vector<std::vector<uint32_t>> pixels;

  size_t num_classes() const { return pixels.size(); }
  std::vector<size_t> sizes() const;
};

RegionIndex build_region_index(const Tensor& t, int n);

// B_i columns are X's pixels at the indexed positions, in index order.
Tensor gather_region(const Tensor& x, const std::vector<uint32_t>& pixels);
void scatter_region(Tensor& x, const std::vector<uint32_t>& pixels,
                    const Tensor& b);

struct PcmCache {
  RegionIndex index;
  std::vector<int> region_class;       // nonempty regions, ascending
  std::vector<PiamCache> piam_caches;  // parallel to region_class
  size_t channels = 0, height = 0, width = 0;
};

struct PcmForwardResult {
  Tensor out;  // C x H x W
  PcmCache cache;
};

// PiAM applied independently inside each nonempty region of T, with one
// shared parameter set. Empty regions are skipped.
PcmForwardResult pcm_forward(const Tensor& x, const Tensor& t,
                             const PiamParams& params, double eps = 1e-8);

struct PcmGrads {
  Tensor d_x;
  Tensor d_w_o, d_w_p;
  double d_alpha = 0.0;
};

PcmGrads pcm_backward(const PcmCache& cache, const PiamParams& params,
                      const Tensor& d_out);

}  // namespace hcnet
