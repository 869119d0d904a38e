#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hcnet/fmap.hpp"
#include "hcnet/objective.hpp"
#include "hcnet/pcm.hpp"
#include "hcnet/piam.hpp"
#include "hcnet/preseg.hpp"
#include "hcnet/rcm.hpp"
#include "hcnet/tensor.hpp"

namespace hcnet {

struct HcnetConfig {
  int num_classes = 3;
  size_t channels = 8;  // must be divisible by 4
  double lambda = 0.8;
  double alpha_init = 0.0;
  double eps_nra = 1e-8;
  double eps_pool = 1e-8;
  double eps_log = 1e-12;
  std::string fusion = "sum";  // "sum" | "concat-1x1"
  bool detach_affiliation = false;
  int encoder_stride = 1;  // 1 or 2
  uint64_t seed = 0;

  void validate() const;
  static HcnetConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static HcnetConfig from_file(const std::string& path);
};

struct HcnetParams {
  Tensor enc_k1;  // C/2 x 3 x 3 x 3
  Tensor enc_k2;  // C x C/2 x 3 x 3
  PresegParams preseg;
  PiamParams pcm_piam;
  PiamParams rcm_piam;
  Tensor cls_head;  // N x C
  Tensor fuse_w;    // C x 2C, used only for fusion = concat-1x1

  static HcnetParams init(const HcnetConfig& cfg, Rng& rng);

  // Fixed flattening order shared with HcnetGrads; used by SGD and the
  // end-to-end gradient check.
  std::vector<double> flatten(const HcnetConfig& cfg) const;
  void unflatten(const HcnetConfig& cfg, const std::vector<double>& flat);

  ParamBundle to_bundle(const HcnetConfig& cfg) const;
  static HcnetParams from_bundle(const ParamBundle& b, const HcnetConfig& cfg);
};

struct HcnetGrads {
  Tensor d_enc_k1, d_enc_k2;
  PresegGrads preseg;
  Tensor d_pcm_w_o, d_pcm_w_p;
  double d_pcm_alpha = 0.0;
  Tensor d_rcm_w_o, d_rcm_w_p;
  double d_rcm_alpha = 0.0;
  Tensor d_cls_head;
  Tensor d_fuse_w;
  Tensor d_image;

  std::vector<double> flatten(const HcnetConfig& cfg) const;
};

struct HcnetCache;  // opaque to callers

struct HcnetOutput {
  Tensor probs;         // N x H x W at input resolution
  Tensor q;             // N x h x w at feature resolution (feeds RCM)
  Tensor q_full;        // N x H x W, prior probabilities at input resolution
  Tensor t;             // h x w uint16 partition
  std::shared_ptr<HcnetCache> cache;
};

HcnetOutput hcnet_forward(const Tensor& image, const HcnetParams& params,
                          const HcnetConfig& cfg);

struct HcnetLossResult {
  double l_context = 0.0;
  double l_prior = 0.0;
  double total = 0.0;
  HcnetOutput out;
  HcnetGrads grads;
};

HcnetLossResult hcnet_loss_and_grads(const Tensor& image, const Tensor& labels,
                                     const ClassWeights& weights,
                                     const HcnetParams& params,
                                     const HcnetConfig& cfg);

struct SyntheticScene {
  Tensor image;      // 3 x H x W float64
  Tensor labels;     // H x W uint16
  Tensor instances;  // H x W uint32, 0 = background / no instance
  std::map<uint32_t, int> instance_class;
};

// Deterministic blob scenes: class 0 background plus rectangles and
// ellipses of classes 1..N-1 with class-correlated colors and seeded noise.
// If `areas` is given it overrides the generated target areas.
SyntheticScene synth_scene(uint64_t seed, size_t h, size_t w, int n_classes,
                           size_t n_instances,
                           const std::vector<uint64_t>* areas = nullptr);

struct TrainReport {
  std::vector<double> total_losses;
  std::vector<double> context_losses;
  std::vector<double> prior_losses;
  double final_pixel_acc = 0.0;
  double final_preseg_acc = 0.0;
  bool diverged = false;
  int diverged_step = -1;
};

// Plain SGD, momentum 0.9, poly learning-rate decay (1 - iter/total)^0.9,
// on one fixed scene with median-frequency class weights.
TrainReport train_toy(const HcnetConfig& cfg, int steps, double lr0,
                      const SyntheticScene& scene,
                      HcnetParams* out_params = nullptr);

nlohmann::json train_report_json(const TrainReport& rep);

}  // namespace hcnet
