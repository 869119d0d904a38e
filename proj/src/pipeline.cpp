#include "hcnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hcnet/ops.hpp"

namespace hcnet {

void HcnetConfig::validate() const {
  if (num_classes < 2) throw ValueError("config: num_classes must be >= 2");
  if (channels == 0 || channels % 4 != 0)
    throw ValueError("config: channels must be divisible by 4");
  if (channels % 2 != 0) throw ValueError("config: channels must be even");
  if (lambda < 0) throw ValueError("config: lambda must be >= 0");
  if (fusion != "sum" && fusion != "concat-1x1")
    throw ValueError("config: fusion must be \"sum\" or \"concat-1x1\"");
  if (encoder_stride != 1 && encoder_stride != 2)
    throw ValueError("config: encoder_stride must be 1 or 2");
}

HcnetConfig HcnetConfig::from_json(const nlohmann::json& j) {
  HcnetConfig c;
  c.num_classes = j.value("num_classes", c.num_classes);
  c.channels = j.value("channels", c.channels);
  c.lambda = j.value("lambda", c.lambda);
  c.alpha_init = j.value("alpha_init", c.alpha_init);
  c.eps_nra = j.value("eps_nra", c.eps_nra);
  c.eps_pool = j.value("eps_pool", c.eps_pool);
  c.eps_log = j.value("eps_log", c.eps_log);
  c.fusion = j.value("fusion", c.fusion);
  c.detach_affiliation = j.value("detach_affiliation", c.detach_affiliation);
  c.encoder_stride = j.value("encoder_stride", c.encoder_stride);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

nlohmann::json HcnetConfig::to_json() const {
  return nlohmann::json{{"num_classes", num_classes},
                        {"channels", channels},
                        {"lambda", lambda},
                        {"alpha_init", alpha_init},
                        {"eps_nra", eps_nra},
                        {"eps_pool", eps_pool},
                        {"eps_log", eps_log},
                        {"fusion", fusion},
                        {"detach_affiliation", detach_affiliation},
                        {"encoder_stride", encoder_stride},
                        {"seed", seed}};
}

HcnetConfig HcnetConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("config: cannot open " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config: bad JSON: ") + e.what());
  }
  return from_json(j);
}

HcnetParams HcnetParams::init(const HcnetConfig& cfg, Rng& rng) {
  cfg.validate();
  const size_t c = cfg.channels;
  HcnetParams p;
  const double s1 = std::sqrt(1.0 / (3.0 * 9.0));
  p.enc_k1 = rng.tensor_uniform({c / 2, 3, 3, 3}, -s1, s1);
  const double s2 = std::sqrt(1.0 / (static_cast<double>(c / 2) * 9.0));
  p.enc_k2 = rng.tensor_uniform({c, c / 2, 3, 3}, -s2, s2);
  p.preseg = PresegParams::init(c, cfg.num_classes, rng);
  p.pcm_piam = PiamParams::init(c, rng);
  p.pcm_piam.alpha = cfg.alpha_init;
  p.rcm_piam = PiamParams::init(c, rng);
  p.rcm_piam.alpha = cfg.alpha_init;
  const double sh = std::sqrt(1.0 / static_cast<double>(c));
  p.cls_head = rng.tensor_uniform({static_cast<size_t>(cfg.num_classes), c},
                                  -sh, sh);
  p.fuse_w = rng.tensor_uniform({c, 2 * c}, -sh, sh);
  return p;
}

namespace {
void append(std::vector<double>& v, const Tensor& t) {
  v.insert(v.end(), t.data(), t.data() + t.numel());
}
void take(const std::vector<double>& v, size_t& off, Tensor& t) {
  for (size_t i = 0; i < t.numel(); ++i) t[i] = v[off + i];
  off += t.numel();
}
}  // namespace

std::vector<double> HcnetParams::flatten(const HcnetConfig& cfg) const {
  std::vector<double> v;
  append(v, enc_k1);
  append(v, enc_k2);
  append(v, preseg.k1);
  append(v, preseg.k3);
  append(v, preseg.k5);
  append(v, preseg.head);
  append(v, pcm_piam.w_o);
  append(v, pcm_piam.w_p);
  v.push_back(pcm_piam.alpha);
  append(v, rcm_piam.w_o);
  append(v, rcm_piam.w_p);
  v.push_back(rcm_piam.alpha);
  append(v, cls_head);
  if (cfg.fusion == "concat-1x1") append(v, fuse_w);
  return v;
}

void HcnetParams::unflatten(const HcnetConfig& cfg,
                            const std::vector<double>& flat) {
  size_t off = 0;
  take(flat, off, enc_k1);
  take(flat, off, enc_k2);
  take(flat, off, preseg.k1);
  take(flat, off, preseg.k3);
  take(flat, off, preseg.k5);
  take(flat, off, preseg.head);
  take(flat, off, pcm_piam.w_o);
  take(flat, off, pcm_piam.w_p);
  pcm_piam.alpha = flat[off++];
  take(flat, off, rcm_piam.w_o);
  take(flat, off, rcm_piam.w_p);
  rcm_piam.alpha = flat[off++];
  take(flat, off, cls_head);
  if (cfg.fusion == "concat-1x1") take(flat, off, fuse_w);
  if (off != flat.size())
    throw ShapeError("HcnetParams::unflatten: size mismatch");
}

std::vector<double> HcnetGrads::flatten(const HcnetConfig& cfg) const {
  std::vector<double> v;
  append(v, d_enc_k1);
  append(v, d_enc_k2);
  append(v, preseg.d_k1);
  append(v, preseg.d_k3);
  append(v, preseg.d_k5);
  append(v, preseg.d_head);
  append(v, d_pcm_w_o);
  append(v, d_pcm_w_p);
  v.push_back(d_pcm_alpha);
  append(v, d_rcm_w_o);
  append(v, d_rcm_w_p);
  v.push_back(d_rcm_alpha);
  append(v, d_cls_head);
  if (cfg.fusion == "concat-1x1") append(v, d_fuse_w);
  return v;
}

ParamBundle HcnetParams::to_bundle(const HcnetConfig& cfg) const {
  ParamBundle b;
  b.params["enc.k1"] = enc_k1;
  b.params["enc.k2"] = enc_k2;
  b.params["preseg.k1"] = preseg.k1;
  b.params["preseg.k3"] = preseg.k3;
  b.params["preseg.k5"] = preseg.k5;
  b.params["preseg.head"] = preseg.head;
  b.params["pcm.piam.w_o"] = pcm_piam.w_o;
  b.params["pcm.piam.w_p"] = pcm_piam.w_p;
  b.params["rcm.piam.w_o"] = rcm_piam.w_o;
  b.params["rcm.piam.w_p"] = rcm_piam.w_p;
  b.params["cls.head"] = cls_head;
  if (cfg.fusion == "concat-1x1") b.params["fuse.w"] = fuse_w;
  b.scalars["pcm.piam.alpha"] = pcm_piam.alpha;
  b.scalars["rcm.piam.alpha"] = rcm_piam.alpha;
  b.meta["num_classes"] = cfg.num_classes;
  b.meta["channels"] = cfg.channels;
  return b;
}

HcnetParams HcnetParams::from_bundle(const ParamBundle& b,
                                     const HcnetConfig& cfg) {
  HcnetParams p;
  p.enc_k1 = b.param("enc.k1");
  p.enc_k2 = b.param("enc.k2");
  p.preseg.k1 = b.param("preseg.k1");
  p.preseg.k3 = b.param("preseg.k3");
  p.preseg.k5 = b.param("preseg.k5");
  p.preseg.head = b.param("preseg.head");
  p.preseg.num_classes = cfg.num_classes;
  p.pcm_piam.w_o = b.param("pcm.piam.w_o");
  p.pcm_piam.w_p = b.param("pcm.piam.w_p");
  p.pcm_piam.alpha = b.scalar("pcm.piam.alpha");
  p.rcm_piam.w_o = b.param("rcm.piam.w_o");
  p.rcm_piam.w_p = b.param("rcm.piam.w_p");
  p.rcm_piam.alpha = b.scalar("rcm.piam.alpha");
  p.cls_head = b.param("cls.head");
  if (cfg.fusion == "concat-1x1") p.fuse_w = b.param("fuse.w");
  p.preseg.validate(cfg.channels);
  return p;
}

struct HcnetCache {
  Tensor image;
  Tensor enc1;      // conv1 output before any subsampling
  Tensor enc1s;     // after optional stride-2 subsample
  Tensor feat;      // encoder output F, C x h x w
  PresegCache preseg;
  PcmCache pcm;
  RcmCache rcm;
  Tensor x_prime, x_second;
  Tensor concat;    // 2C x hw, only for concat fusion
  Tensor fused;     // C x h x w
  Tensor logits;    // N x h x w
  Tensor up_logits; // N x H x W
  Tensor prior_logits_up;  // N x H x W
};

HcnetOutput hcnet_forward(const Tensor& image, const HcnetParams& params,
                          const HcnetConfig& cfg) {
  cfg.validate();
  if (image.ndim() != 3 || image.dim(0) != 3)
    throw ShapeError("hcnet_forward: image must be 3 x H x W");
  const size_t H = image.dim(1), W = image.dim(2);
  const size_t c = cfg.channels;
  const size_t n = static_cast<size_t>(cfg.num_classes);

  HcnetOutput out;
  out.cache = std::make_shared<HcnetCache>();
  HcnetCache& cc = *out.cache;
  cc.image = image;

  cc.enc1 = conv2d_dilated(image, params.enc_k1, 1);
  cc.enc1s = (cfg.encoder_stride == 2) ? subsample2x(cc.enc1) : cc.enc1;
  cc.feat = conv2d_dilated(cc.enc1s, params.enc_k2, 1);
  const size_t h = cc.feat.dim(1), w = cc.feat.dim(2);

  PresegForwardResult pre = preseg_forward(cc.feat, params.preseg);
  cc.preseg = std::move(pre.cache);
  out.q = pre.q;
  out.t = partition(out.q);

  PcmForwardResult pcm = pcm_forward(cc.feat, out.t, params.pcm_piam,
                                     cfg.eps_nra);
  cc.x_prime = pcm.out;
  cc.pcm = std::move(pcm.cache);

  RcmForwardResult rcm = rcm_forward(cc.x_prime, out.q, params.rcm_piam,
                                     cfg.eps_pool, cfg.eps_nra);
  cc.x_second = rcm.out;
  cc.rcm = std::move(rcm.cache);

  if (cfg.fusion == "sum") {
    cc.fused = add(cc.x_prime, cc.x_second);
  } else {
    cc.concat = Tensor({2 * c, h * w});
    for (size_t ci = 0; ci < c; ++ci)
      for (size_t p = 0; p < h * w; ++p) {
        cc.concat.at(ci, p) = cc.x_prime[ci * h * w + p];
        cc.concat.at(c + ci, p) = cc.x_second[ci * h * w + p];
      }
    cc.fused = matmul(params.fuse_w, cc.concat).reshaped({c, h, w});
  }

  cc.logits =
      matmul(params.cls_head, cc.fused.reshaped({c, h * w})).reshaped({n, h, w});
  cc.up_logits = (cfg.encoder_stride == 2)
                     ? bilinear_resize(cc.logits, H, W)
                     : cc.logits;
  cc.prior_logits_up = (cfg.encoder_stride == 2)
                           ? bilinear_resize(cc.preseg.logits, H, W)
                           : cc.preseg.logits;

  out.probs = softmax_axis(cc.up_logits, 0);
  out.q_full = (cfg.encoder_stride == 2)
                   ? softmax_axis(cc.prior_logits_up, 0)
                   : out.q;
  return out;
}

HcnetLossResult hcnet_loss_and_grads(const Tensor& image, const Tensor& labels,
                                     const ClassWeights& weights,
                                     const HcnetParams& params,
                                     const HcnetConfig& cfg) {
  HcnetLossResult res;
  res.out = hcnet_forward(image, params, cfg);
  HcnetCache& cc = *res.out.cache;
  const size_t c = cfg.channels;
  const size_t n = static_cast<size_t>(cfg.num_classes);
  const size_t H = image.dim(1), W = image.dim(2);
  const size_t h = cc.feat.dim(1), w = cc.feat.dim(2);

  const CeResult ce_ctx =
      weighted_ce(res.out.probs, labels, weights, cfg.eps_log);
  const CeResult ce_prior =
      weighted_ce(res.out.q_full, labels, weights, cfg.eps_log);
  res.l_context = ce_ctx.loss;
  res.l_prior = ce_prior.loss;
  res.total = total_loss(res.l_context, res.l_prior, cfg.lambda);

  // fused softmax-CE gradients with respect to the logits
  Tensor d_up_logits = softmax_ce_logit_grad(res.out.probs, labels, weights);
  Tensor d_prior_logits_up =
      scale(softmax_ce_logit_grad(res.out.q_full, labels, weights), cfg.lambda);

  const Tensor d_logits = (cfg.encoder_stride == 2)
                              ? bilinear_resize_backward(d_up_logits, h, w)
                              : d_up_logits;
  const Tensor d_prior_logits =
      (cfg.encoder_stride == 2)
          ? bilinear_resize_backward(d_prior_logits_up, h, w)
          : d_prior_logits_up;

  HcnetGrads& g = res.grads;

  // classifier head
  const Tensor d_logits_flat = d_logits.reshaped({n, h * w});
  const Tensor fused_flat = cc.fused.reshaped({c, h * w});
  g.d_cls_head = matmul(d_logits_flat, transpose2d(fused_flat));
  const Tensor d_fused =
      matmul(transpose2d(params.cls_head), d_logits_flat).reshaped({c, h, w});

  Tensor d_x_prime, d_x_second;
  if (cfg.fusion == "sum") {
    d_x_prime = d_fused;
    d_x_second = d_fused;
    g.d_fuse_w = Tensor::zeros(params.fuse_w.shape());
  } else {
    const Tensor d_fused_flat = d_fused.reshaped({c, h * w});
    g.d_fuse_w = matmul(d_fused_flat, transpose2d(cc.concat));
    const Tensor d_concat = matmul(transpose2d(params.fuse_w), d_fused_flat);
    d_x_prime = Tensor({c, h, w});
    d_x_second = Tensor({c, h, w});
    for (size_t ci = 0; ci < c; ++ci)
      for (size_t p = 0; p < h * w; ++p) {
        d_x_prime[ci * h * w + p] = d_concat.at(ci, p);
        d_x_second[ci * h * w + p] = d_concat.at(c + ci, p);
      }
  }

  RcmGrads rg = rcm_backward(cc.rcm, params.rcm_piam, d_x_second);
  g.d_rcm_w_o = std::move(rg.d_w_o);
  g.d_rcm_w_p = std::move(rg.d_w_p);
  g.d_rcm_alpha = rg.d_alpha;
  d_x_prime = add(d_x_prime, rg.d_x);

  PcmGrads pg = pcm_backward(cc.pcm, params.pcm_piam, d_x_prime);
  g.d_pcm_w_o = std::move(pg.d_w_o);
  g.d_pcm_w_p = std::move(pg.d_w_p);
  g.d_pcm_alpha = pg.d_alpha;

  const Tensor* d_q = cfg.detach_affiliation ? nullptr : &rg.d_q;
  g.preseg = preseg_backward(cc.preseg, params.preseg, d_q, &d_prior_logits);

  Tensor d_feat = add(pg.d_x, g.preseg.d_f);

  Tensor d_enc1s;
  conv2d_dilated_backward(cc.enc1s, params.enc_k2, 1, d_feat, &d_enc1s,
                          &g.d_enc_k2);
  const Tensor d_enc1 =
      (cfg.encoder_stride == 2)
          ? subsample2x_backward(d_enc1s, cc.enc1.dim(1), cc.enc1.dim(2))
          : d_enc1s;
  conv2d_dilated_backward(cc.image, params.enc_k1, 1, d_enc1, &g.d_image,
                          &g.d_enc_k1);
  (void)H;
  (void)W;
  return res;
}

namespace {

double palette_value(int cls, int ch) {
  return 0.5 + 0.4 * std::cos(2.399963229728653 * cls + 2.0943951023931953 * ch +
                              0.7 * ch * cls);
}

struct FreeRect {
  size_t top = 0, left = 0, fh = 0, fw = 0;
};

}  // namespace

SyntheticScene synth_scene(uint64_t seed, size_t h, size_t w, int n_classes,
                           size_t n_instances,
                           const std::vector<uint64_t>* areas_in) {
  if (n_classes < 2) throw ValueError("synth_scene: need >= 2 classes");
  if (n_instances < 1) throw ValueError("synth_scene: need >= 1 instance");
  const uint64_t hw = static_cast<uint64_t>(h) * w;
  Rng rng(seed);

  // target areas, largest buckets first so packing succeeds
  std::vector<uint64_t> areas;
  if (areas_in) {
    areas = *areas_in;
    if (areas.size() != n_instances)
      throw ValueError("synth_scene: area list size mismatch");
  } else {
    double budget = 0.85 * static_cast<double>(hw);
    if (budget < 9.0 * static_cast<double>(n_instances))
      throw ValueError("synth_scene: infeasible packing");
    for (size_t i = 0; i < n_instances; ++i) {
      const double slots = static_cast<double>(n_instances - i);
      double a;
      if (i % 3 == 0 && hw >= 90000 && budget >= 75000.0) {
        a = 70000.0 + static_cast<double>(rng.uniform_int(6000));
      } else if (i % 3 != 2 && hw >= 30000 && budget >= 5200.0) {
        a = 2600.0 + rng.uniform(0.0, std::min(budget - 2600.0, 15000.0));
      } else {
        a = 30.0 + rng.uniform(0.0, std::min(budget * 0.4, 2200.0));
      }
      // leave room for the remaining instances
      a = std::min(a, budget - 9.0 * (slots - 1.0));
      a = std::max(a, 9.0);
      if (a > budget) throw ValueError("synth_scene: infeasible packing");
      areas.push_back(static_cast<uint64_t>(a));
      budget -= a;
    }
  }

  SyntheticScene scene;
  scene.labels = Tensor::zeros({h, w}, DType::u16);
  scene.instances = Tensor::zeros({h, w}, DType::u32);

  // constructive placement: largest blobs first into guillotine-split free
  // rectangles, with a one-pixel gap so instances never touch
  std::vector<size_t> order(n_instances);
  for (size_t i = 0; i < n_instances; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return areas[a] > areas[b]; });
  std::vector<FreeRect> free_rects{{0, 0, h, w}};

  for (size_t i : order) {
    const int cls = 1 + static_cast<int>(i % (n_classes - 1));
    const uint32_t id = static_cast<uint32_t>(i + 1);
    const uint64_t area = areas[i];
    const double aspect = rng.uniform(0.7, 1.4);
    // ellipses cover ~pi/4 of their bounding box; inflate to compensate
    const bool ellipse = !areas_in && (i % 2 == 1);
    const double box_area =
        ellipse ? static_cast<double>(area) * 4.0 / 3.14159265358979
                : static_cast<double>(area);

    size_t top = 0, left = 0, bh = 0, bw = 0;
    bool placed = false;
    for (size_t fi = 0; fi < free_rects.size() && !placed; ++fi) {
      const FreeRect& fr = free_rects[fi];
      size_t try_w = std::max<size_t>(
          1, static_cast<size_t>(std::sqrt(box_area * aspect) + 0.5));
      try_w = std::min(try_w, fr.fw);
      size_t try_h = (static_cast<size_t>(box_area) + try_w - 1) / try_w;
      if (try_h > fr.fh) {
        try_h = fr.fh;
        try_w = (static_cast<size_t>(box_area) + try_h - 1) / try_h;
      }
      if (try_w > fr.fw || try_h * try_w < box_area) continue;
      top = fr.top;
      left = fr.left;
      bh = try_h;
      bw = try_w;
      // split the remaining free space (one-pixel gap around the blob)
      const FreeRect right{fr.top, fr.left + bw + 1,
                           std::min(bh + 1, fr.fh),
                           fr.fw > bw + 1 ? fr.fw - bw - 1 : 0};
      const FreeRect bottom{fr.top + bh + 1, fr.left,
                            fr.fh > bh + 1 ? fr.fh - bh - 1 : 0, fr.fw};
      free_rects.erase(free_rects.begin() + static_cast<long>(fi));
      if (right.fh > 0 && right.fw > 0) free_rects.push_back(right);
      if (bottom.fh > 0 && bottom.fw > 0) free_rects.push_back(bottom);
      placed = true;
    }
    if (!placed) {
      // no free rectangle large enough: fall back to random placement with
      // overwriting; the coverage check below rejects infeasible scenes
      bw = std::max<size_t>(
          1, std::min(w, static_cast<size_t>(std::sqrt(box_area) + 0.5)));
      bh = std::max<size_t>(
          1,
          std::min(h, (static_cast<size_t>(box_area) + bw - 1) / bw));
      bw = std::min<size_t>(w, bw);
      top = static_cast<size_t>(rng.uniform_int(h - bh + 1));
      left = static_cast<size_t>(rng.uniform_int(w - bw + 1));
    }

    if (ellipse) {
      const double cy = top + 0.5 * (bh - 1);
      const double cx = left + 0.5 * (bw - 1);
      const double ry = 0.5 * bh, rx = 0.5 * bw;
      for (size_t r = top; r < top + bh; ++r)
        for (size_t cc = left; cc < left + bw; ++cc) {
          const double dy = (static_cast<double>(r) - cy) / ry;
          const double dx = (static_cast<double>(cc) - cx) / rx;
          if (dy * dy + dx * dx > 1.0) continue;
          scene.labels.at(r, cc) = cls;
          scene.instances.at(r, cc) = id;
        }
    } else {
      // exact pixel count: fill row-major, partial last row
      uint64_t remaining = area;
      for (size_t r = top; r < top + bh && remaining > 0; ++r)
        for (size_t cc = left; cc < left + bw && remaining > 0; ++cc) {
          scene.labels.at(r, cc) = cls;
          scene.instances.at(r, cc) = id;
          --remaining;
        }
    }
    scene.instance_class[id] = cls;
  }

  for (const auto& [id, cls] : scene.instance_class) {
    bool any = false;
    for (size_t p = 0; p < hw && !any; ++p)
      if (static_cast<uint32_t>(scene.instances[p]) == id) any = true;
    if (!any)
      throw ValueError("synth_scene: instance " + std::to_string(id) +
                       " fully overwritten; packing infeasible");
  }

  scene.image = Tensor({3, h, w});
  for (size_t ch = 0; ch < 3; ++ch)
    for (size_t p = 0; p < hw; ++p) {
      const int cls = static_cast<int>(scene.labels[p]);
      scene.image[ch * hw + p] =
          palette_value(cls, static_cast<int>(ch)) + 0.05 * rng.normal();
    }
  return scene;
}

TrainReport train_toy(const HcnetConfig& cfg, int steps, double lr0,
                      const SyntheticScene& scene, HcnetParams* out_params) {
  if (steps < 1) throw ValueError("train_toy: steps must be >= 1");
  cfg.validate();

  std::vector<uint64_t> counts(static_cast<size_t>(cfg.num_classes), 0);
  for (size_t p = 0; p < scene.labels.numel(); ++p)
    ++counts[static_cast<size_t>(scene.labels[p])];
  const ClassWeights weights = median_frequency_weights(counts);

  Rng rng(cfg.seed);
  HcnetParams params = HcnetParams::init(cfg, rng);
  std::vector<double> flat = params.flatten(cfg);
  std::vector<double> momentum(flat.size(), 0.0);

  TrainReport rep;
  for (int step = 0; step < steps; ++step) {
    params.unflatten(cfg, flat);
    HcnetLossResult r;
    try {
      r = hcnet_loss_and_grads(scene.image, scene.labels, weights, params,
                               cfg);
    } catch (const NumericError&) {
      rep.diverged = true;
      rep.diverged_step = step;
      break;
    }
    rep.total_losses.push_back(r.total);
    rep.context_losses.push_back(r.l_context);
    rep.prior_losses.push_back(r.l_prior);
    if (!std::isfinite(r.total)) {
      rep.diverged = true;
      rep.diverged_step = step;
      break;
    }
    const double lr =
        lr0 * std::pow(1.0 - static_cast<double>(step) / steps, 0.9);
    const std::vector<double> grad = r.grads.flatten(cfg);
    for (size_t i = 0; i < flat.size(); ++i) {
      momentum[i] = 0.9 * momentum[i] + grad[i];
      flat[i] -= lr * momentum[i];
    }
  }

  params.unflatten(cfg, flat);
  HcnetOutput out = hcnet_forward(scene.image, params, cfg);
  const Tensor pred = partition(out.probs);
  const Tensor pre_pred = partition(out.q_full);
  size_t ok = 0, pre_ok = 0;
  for (size_t p = 0; p < scene.labels.numel(); ++p) {
    if (pred[p] == scene.labels[p]) ++ok;
    if (pre_pred[p] == scene.labels[p]) ++pre_ok;
  }
  rep.final_pixel_acc = static_cast<double>(ok) / scene.labels.numel();
  rep.final_preseg_acc = static_cast<double>(pre_ok) / scene.labels.numel();
  if (out_params) *out_params = params;
  return rep;
}

nlohmann::json train_report_json(const TrainReport& rep) {
  return nlohmann::json{{"total_losses", rep.total_losses},
                        {"context_losses", rep.context_losses},
                        {"prior_losses", rep.prior_losses},
                        {"final_pixel_acc", rep.final_pixel_acc},
                        {"final_preseg_acc", rep.final_preseg_acc},
                        {"diverged", rep.diverged},
                        {"diverged_step", rep.diverged_step}};
}

}  // namespace hcnet
