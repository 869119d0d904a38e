#pragma once

#include "hcnet/tensor.hpp"

namespace hcnet {

// Multi-scale guided pre-segmentation: three parallel 3x3 dilated
// convolutions (rates 1/3/5, 64 channels each) summed, a 1x1 classifier
// head, and a channel softmax giving the affiliation probabilities Q.
struct PresegParams {
  Tensor k1, k3, k5;  // 64 x Cin x 3 x 3
  Tensor head;        // N x 64 x 1 x 1
  int num_classes = 0;

  static constexpr size_t kBranchChannels = 64;

  static PresegParams init(size_t cin, int num_classes, Rng& rng);
  void validate(size_t cin) const;
};

struct PresegCache {
  Tensor f;       // input Cin x H x W
  Tensor summed;  // 64 x H x W branch sum
  Tensor logits;  // N x H x W
  Tensor q;       // N x H x W
};

struct PresegForwardResult {
  Tensor q;  // affiliation map, channel slices sum to 1 per pixel
  PresegCache cache;
};

PresegForwardResult preseg_forward(const Tensor& f, const PresegParams& params);

// Per-pixel argmax over channels, ties to the lowest class index.
Tensor partition(const Tensor& q);  // H x W uint16

struct PresegGrads {
  Tensor d_f, d_k1, d_k3, d_k5, d_head;
};

// Either gradient entry point may be null. d_q is a gradient with respect
// to Q (routed through the softmax Jacobian); d_logits_extra is added to
// the logit gradient directly (fused softmax-CE path).
PresegGrads preseg_backward(const PresegCache& cache,
                            const PresegParams& params, const Tensor* d_q,
                            const Tensor* d_logits_extra);

}  // namespace hcnet
