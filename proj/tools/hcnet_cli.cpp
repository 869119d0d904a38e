#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hcnet/cost_model.hpp"
#include "hcnet/fmap.hpp"
#include "hcnet/gradcheck.hpp"
#include "hcnet/metrics.hpp"
#include "hcnet/objective.hpp"
#include "hcnet/ops.hpp"
#include "hcnet/pipeline.hpp"
#include "json.hpp"

using nlohmann::json;

namespace {

void write_json(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw hcnet::FormatError("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

int cmd_forward(const std::string& input, const std::string& params_dir,
                uint64_t init_seed, bool have_init_seed,
                const std::string& config_path, const std::string& out,
                const std::string& dump_q, const std::string& dump_t) {
  hcnet::HcnetConfig cfg = config_path.empty()
                               ? hcnet::HcnetConfig{}
                               : hcnet::HcnetConfig::from_file(config_path);
  hcnet::HcnetParams params = [&] {
    if (!params_dir.empty())
      return hcnet::HcnetParams::from_bundle(
          hcnet::ParamBundle::load(params_dir), cfg);
    hcnet::Rng rng(have_init_seed ? init_seed : cfg.seed);
    return hcnet::HcnetParams::init(cfg, rng);
  }();
  const hcnet::Tensor image = hcnet::read_fmap(input);
  hcnet::HcnetOutput o = hcnet::hcnet_forward(image, params, cfg);
  hcnet::write_fmap(o.probs, out);
  if (!dump_q.empty()) hcnet::write_fmap(o.q, dump_q);
  if (!dump_t.empty()) hcnet::write_fmap(o.t, dump_t);
  std::cout << "forward: wrote " << out << " " << o.probs.shape_str() << "\n";
  return 0;
}

int cmd_gradcheck(const std::string& op, uint64_t seed, double eps,
                  double tol);

int cmd_bench(size_t h, size_t w, size_t c, size_t n,
              const std::string& partition_mode,
              const std::string& partition_file, const std::string& json_out,
              uint64_t seed) {
  std::vector<size_t> sizes;
  if (partition_mode == "balanced") {
    sizes = hcnet::balanced_partition(h * w, n);
  } else if (partition_mode == "random") {
    hcnet::Rng rng(seed);
    sizes = hcnet::random_partition(h * w, n, rng);
  } else if (partition_mode == "from-file") {
    std::ifstream f(partition_file);
    if (!f)
      throw hcnet::FormatError("cannot open partition file: " + partition_file);
    json j;
    f >> j;
    for (const auto& v : j) sizes.push_back(v.get<size_t>());
  } else {
    std::cerr << "bench: unknown partition mode " << partition_mode << "\n";
    return 2;
  }

  const hcnet::CostReport rep = hcnet::make_cost_report(h, w, c, sizes, n);
  json out{{"macs_dense", rep.macs_dense},
           {"macs_pcm", rep.macs_pcm},
           {"macs_rcm", rep.macs_rcm},
           {"macs_total", rep.macs_total},
           {"bytes_attn_dense", rep.bytes_attn_dense},
           {"bytes_attn_hier", rep.bytes_attn_hier},
           {"ratio", rep.ratio}};
  if (!json_out.empty()) write_json(out, json_out);

  std::cout << "cost model  H=" << h << " W=" << w << " C=" << c << " N=" << n
            << " partition=" << partition_mode << "\n";
  std::cout << "  dense MACs        " << rep.macs_dense << "\n";
  std::cout << "  hier  MACs        " << rep.macs_total << "  (PCM "
            << rep.macs_pcm << " + RCM " << rep.macs_rcm << ")\n";
  std::cout << "  MAC ratio         " << rep.ratio << "\n";
  std::cout << "  attn bytes dense  " << rep.bytes_attn_dense << "\n";
  std::cout << "  attn bytes hier   " << rep.bytes_attn_hier << "\n";
  return 0;
}

int cmd_train_toy(int steps, double lr, double lambda, uint64_t seed,
                  const std::string& report_path,
                  const std::string& save_params) {
  hcnet::HcnetConfig cfg;
  cfg.lambda = lambda;
  cfg.seed = seed;
  const hcnet::SyntheticScene scene =
      hcnet::synth_scene(seed, 32, 32, cfg.num_classes, 4);
  hcnet::HcnetParams params;
  const hcnet::TrainReport rep =
      hcnet::train_toy(cfg, steps, lr, scene, &params);
  if (!report_path.empty()) write_json(hcnet::train_report_json(rep), report_path);
  if (!save_params.empty()) params.to_bundle(cfg).save(save_params);
  std::cout << "train-toy: steps=" << steps
            << " final_loss=" << rep.total_losses.back()
            << " pixel_acc=" << rep.final_pixel_acc
            << " preseg_acc=" << rep.final_preseg_acc << "\n";
  return rep.diverged ? 1 : 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path,
             const std::string& inst_path, const std::string& inst_classes,
             int n, std::optional<int> ignore_label,
             const std::string& report_path) {
  const hcnet::Tensor pred = hcnet::read_fmap(pred_path);
  const hcnet::Tensor gt = hcnet::read_fmap(gt_path);
  const hcnet::ConfusionCounts cc = hcnet::confusion(pred, gt, n, ignore_label);
  const hcnet::IouResult iou = hcnet::iou_per_class(cc);
  const hcnet::F1Result f1 = hcnet::f1_oa(cc);

  json out{{"miou", iou.miou},
           {"oa", f1.oa},
           {"iou_per_class", iou.per_class},
           {"f1_per_class", f1.per_class}};

  if (!inst_path.empty()) {
    const hcnet::Tensor inst = hcnet::read_fmap(inst_path);
    std::ifstream f(inst_classes);
    if (!f)
      throw hcnet::FormatError("cannot open instance-class table: " +
                               inst_classes);
    json jt;
    f >> jt;
    std::map<uint32_t, int> table;
    for (const auto& [k, v] : jt.items())
      table[static_cast<uint32_t>(std::stoul(k))] = v.get<int>();
    const hcnet::SIoUReport sr = hcnet::s_iou(pred, inst, table);
    json recs = json::array();
    for (const auto& r : sr.records)
      recs.push_back({{"instance", r.instance_id},
                      {"class", r.class_id},
                      {"area", r.area},
                      {"s_iou", r.s_iou},
                      {"bucket", r.bucket}});
    out["s_iou"] = {{"records", recs},
                    {"bucket_means",
                     {sr.bucket_mean[0], sr.bucket_mean[1], sr.bucket_mean[2]}},
                    {"bucket_counts",
                     {sr.bucket_count[0], sr.bucket_count[1],
                      sr.bucket_count[2]}},
                    {"overall", sr.overall}};
  }
  if (!report_path.empty()) write_json(out, report_path);
  std::cout << "eval: mIoU=" << iou.miou << " OA=" << f1.oa << "\n";
  return 0;
}

int cmd_synth(uint64_t seed, size_t h, size_t w, int classes, size_t instances,
              const std::string& out_dir) {
  namespace fs = std::filesystem;
  const hcnet::SyntheticScene sc =
      hcnet::synth_scene(seed, h, w, classes, instances);
  fs::create_directories(out_dir);
  hcnet::write_fmap(sc.image, (fs::path(out_dir) / "image.fmap").string());
  hcnet::write_fmap(sc.labels, (fs::path(out_dir) / "labels.fmap").string());
  hcnet::write_fmap(sc.instances,
                    (fs::path(out_dir) / "instances.fmap").string());
  json table = json::object();
  for (const auto& [id, cls] : sc.instance_class)
    table[std::to_string(id)] = cls;
  write_json(table, (fs::path(out_dir) / "instance_classes.json").string());
  std::cout << "synth: wrote scene to " << out_dir << " ("
            << sc.instance_class.size() << " instances)\n";
  return 0;
}

// Positive projections and features keep the row-normalization sums away
// from zero, where central differences at the default step are unreliable.
hcnet::PiamParams positive_piam(size_t c, hcnet::Rng& rng) {
  hcnet::PiamParams p;
  p.w_o = rng.tensor_uniform({c / 4, c}, 0.05, 0.35);
  p.w_p = rng.tensor_uniform({c / 4, c}, 0.05, 0.35);
  p.alpha = rng.uniform(-0.5, 0.5);
  return p;
}

int cmd_gradcheck(const std::string& op, uint64_t seed, double eps,
                  double tol) {
  using namespace hcnet;
  Rng rng(seed);
  GradcheckReport rep;

  if (op == "piam") {
    const size_t c = 8, k = 5;
    PiamParams params = positive_piam(c, rng);
    const Tensor b = rng.tensor_uniform({c, k}, 0.1, 1.1);
    DiffOp d{op,
             [&](const std::vector<Tensor>& in) {
               PiamParams p{in[1], in[2], in[3][0]};
               return piam_forward(in[0], p).out;
             },
             [&](const std::vector<Tensor>& in) {
               PiamParams p{in[1], in[2], in[3][0]};
               PiamForwardResult f = piam_forward(in[0], p);
               PiamGrads g = piam_backward(
                   f.cache, p, Tensor::full(f.out.shape(), 1.0));
               return std::vector<Tensor>{
                   g.d_b, g.d_w_o, g.d_w_p,
                   Tensor::from({1}, {g.d_alpha})};
             }};
    rep = gradcheck(d, {b, params.w_o, params.w_p,
                        Tensor::from({1}, {params.alpha})},
                    eps, tol);
  } else if (op == "preseg") {
    const size_t cin = 4, h = 6, w = 6;
    const int n = 3;
    PresegParams params = PresegParams::init(cin, n, rng);
    const Tensor f = rng.tensor_uniform({cin, h, w}, -1, 1);
    // scalarize with fixed weights; a plain sum of Q is constant
    const Tensor wgt =
        rng.tensor_uniform({static_cast<size_t>(n), h, w}, -1, 1);
    DiffOp d{op,
             [&](const std::vector<Tensor>& in) {
               PresegParams p{in[1], in[2], in[3], in[4], n};
               Tensor q = preseg_forward(in[0], p).q;
               for (size_t i = 0; i < q.numel(); ++i) q[i] *= wgt[i];
               return q;
             },
             [&](const std::vector<Tensor>& in) {
               PresegParams p{in[1], in[2], in[3], in[4], n};
               PresegForwardResult r = preseg_forward(in[0], p);
               PresegGrads g = preseg_backward(r.cache, p, &wgt, nullptr);
               return std::vector<Tensor>{g.d_f, g.d_k1, g.d_k3, g.d_k5,
                                          g.d_head};
             }};
    rep = gradcheck(d, {f, params.k1, params.k3, params.k5, params.head}, eps,
                    tol, 60, seed);
  } else if (op == "pcm" || op == "rcm" || op == "loss" || op == "e2e") {
    // these mirror the unit/acceptance suites; see tests for full coverage
    const size_t c = 8, h = (op == "e2e") ? 8 : 6, w = h;
    const int n = 3;
    if (op == "pcm") {
      PiamParams params = positive_piam(c, rng);
      const Tensor x = rng.tensor_uniform({c, h, w}, 0.1, 1.1);
      Tensor t({h, w}, DType::u16);
      for (size_t p = 0; p < t.numel(); ++p)
        t[p] = static_cast<double>(rng.uniform_int(n));
      DiffOp d{op,
               [&](const std::vector<Tensor>& in) {
                 PiamParams pp{in[1], in[2], in[3][0]};
                 return pcm_forward(in[0], t, pp).out;
               },
               [&](const std::vector<Tensor>& in) {
                 PiamParams pp{in[1], in[2], in[3][0]};
                 PcmForwardResult f = pcm_forward(in[0], t, pp);
                 PcmGrads g = pcm_backward(f.cache, pp,
                                           Tensor::full(f.out.shape(), 1.0));
                 return std::vector<Tensor>{
                     g.d_x, g.d_w_o, g.d_w_p,
                     Tensor::from({1}, {g.d_alpha})};
               }};
      rep = gradcheck(d, {x, params.w_o, params.w_p,
                          Tensor::from({1}, {params.alpha})},
                      eps, tol);
    } else if (op == "rcm") {
      PiamParams params = positive_piam(c, rng);
      const Tensor x = rng.tensor_uniform({c, h, w}, 0.1, 1.1);
      Tensor logits = rng.tensor_uniform({static_cast<size_t>(n), h, w}, -1, 1);
      const Tensor q = softmax_axis(logits, 0);
      DiffOp d{op,
               [&](const std::vector<Tensor>& in) {
                 PiamParams pp{in[2], in[3], in[4][0]};
                 return rcm_forward(in[0], in[1], pp).out;
               },
               [&](const std::vector<Tensor>& in) {
                 PiamParams pp{in[2], in[3], in[4][0]};
                 RcmForwardResult f = rcm_forward(in[0], in[1], pp);
                 RcmGrads g = rcm_backward(f.cache, pp,
                                           Tensor::full(f.out.shape(), 1.0));
                 return std::vector<Tensor>{
                     g.d_x, g.d_q, g.d_w_o, g.d_w_p,
                     Tensor::from({1}, {g.d_alpha})};
               }};
      rep = gradcheck(d, {x, q, params.w_o, params.w_p,
                          Tensor::from({1}, {params.alpha})},
                      eps, tol);
    } else if (op == "loss") {
      const Tensor logits =
          rng.tensor_uniform({static_cast<size_t>(n), h, w}, -1, 1);
      Tensor y({h, w}, DType::u16);
      for (size_t p = 0; p < y.numel(); ++p)
        y[p] = static_cast<double>(rng.uniform_int(n));
      std::vector<uint64_t> counts(n, 0);
      for (size_t p = 0; p < y.numel(); ++p)
        ++counts[static_cast<size_t>(y[p])];
      const ClassWeights cw = median_frequency_weights(counts);
      DiffOp d{op,
               [&](const std::vector<Tensor>& in) {
                 const Tensor p = softmax_axis(in[0], 0);
                 return Tensor::from({1}, {weighted_ce(p, y, cw).loss});
               },
               [&](const std::vector<Tensor>& in) {
                 const Tensor p = softmax_axis(in[0], 0);
                 return std::vector<Tensor>{softmax_ce_logit_grad(p, y, cw)};
               }};
      rep = gradcheck(d, {logits}, eps, tol);
    } else {  // e2e
      HcnetConfig cfg;
      cfg.channels = c;
      cfg.num_classes = n;
      cfg.seed = seed;
      const SyntheticScene scene = synth_scene(seed + 21, h, w, n, 2);
      std::vector<uint64_t> counts(n, 0);
      for (size_t p = 0; p < scene.labels.numel(); ++p)
        ++counts[static_cast<size_t>(scene.labels[p])];
      const ClassWeights cw = median_frequency_weights(counts);
      Rng prng(seed * 7919 + 13);
      HcnetParams params = HcnetParams::init(cfg, prng);
      params.pcm_piam.alpha = prng.uniform(-0.3, 0.3);
      params.rcm_piam.alpha = prng.uniform(-0.3, 0.3);
      const Tensor flat0 =
          Tensor::from({params.flatten(cfg).size()}, params.flatten(cfg));
      DiffOp d{op,
               [&](const std::vector<Tensor>& in) {
                 HcnetParams p = params;
                 p.unflatten(cfg, std::vector<double>(
                                      in[0].data(), in[0].data() + in[0].numel()));
                 HcnetLossResult r = hcnet_loss_and_grads(
                     scene.image, scene.labels, cw, p, cfg);
                 return Tensor::from({1}, {r.total});
               },
               [&](const std::vector<Tensor>& in) {
                 HcnetParams p = params;
                 p.unflatten(cfg, std::vector<double>(
                                      in[0].data(), in[0].data() + in[0].numel()));
                 HcnetLossResult r = hcnet_loss_and_grads(
                     scene.image, scene.labels, cw, p, cfg);
                 const std::vector<double> g = r.grads.flatten(cfg);
                 return std::vector<Tensor>{Tensor::from({g.size()}, g)};
               }};
      rep = gradcheck(d, {flat0}, eps, tol, 200, seed);
    }
  } else {
    std::cerr << "gradcheck: unknown op \"" << op << "\"\n";
    return 2;
  }

  std::cout << "gradcheck " << op << " seed=" << seed
            << " max_rel_err=" << rep.max_rel_err << " coords="
            << rep.coords_checked << " => " << (rep.passed ? "PASS" : "FAIL")
            << "\n";
  return rep.passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical-context segmentation toolkit"};
  app.require_subcommand(1);

  // forward
  auto* fwd = app.add_subcommand("forward", "run the network on an FMAP image");
  std::string f_input, f_params, f_config, f_out, f_dump_q, f_dump_t;
  uint64_t f_init_seed = 0;
  bool f_have_seed = false;
  fwd->add_option("--input", f_input, "input image FMAP (3xHxW)")->required();
  fwd->add_option("--params", f_params, "parameter bundle directory");
  auto* seed_opt =
      fwd->add_option("--init-seed", f_init_seed,
                      "initialize parameters from this seed instead of --params");
  fwd->add_option("--config", f_config, "config JSON");
  fwd->add_option("--out", f_out, "output probabilities FMAP")->required();
  fwd->add_option("--dump-q", f_dump_q, "write affiliation map Q");
  fwd->add_option("--dump-t", f_dump_t, "write partition map T");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check");
  std::string g_op;
  uint64_t g_seed = 0;
  double g_eps = 1e-5, g_tol = 1e-4;
  gc->add_option("--op", g_op, "piam|preseg|pcm|rcm|loss|e2e")->required();
  gc->add_option("--seed", g_seed, "rng seed");
  gc->add_option("--eps", g_eps, "finite-difference step");
  gc->add_option("--tol", g_tol, "relative-error tolerance");

  // bench
  auto* bn = app.add_subcommand("bench", "MAC/byte cost model");
  size_t b_h = 64, b_w = 64, b_c = 64, b_n = 19;
  std::string b_partition = "balanced", b_partition_file, b_json;
  uint64_t b_seed = 0;
  bn->add_option("--height", b_h)->required();
  bn->add_option("--width", b_w)->required();
  bn->add_option("--channels", b_c)->required();
  bn->add_option("--classes", b_n)->required();
  bn->add_option("--partition", b_partition, "balanced|random|from-file");
  bn->add_option("--partition-file", b_partition_file,
                 "JSON array of region sizes for from-file");
  bn->add_option("--seed", b_seed);
  bn->add_option("--json", b_json, "write CostReport JSON here");

  // train-toy
  auto* tt = app.add_subcommand("train-toy", "toy SGD training run");
  int t_steps = 300;
  double t_lr = 0.01, t_lambda = 0.8;
  uint64_t t_seed = 0;
  std::string t_report, t_save_params;
  tt->add_option("--steps", t_steps);
  tt->add_option("--lr", t_lr);
  tt->add_option("--lambda", t_lambda);
  tt->add_option("--seed", t_seed);
  tt->add_option("--report", t_report, "training report JSON");
  tt->add_option("--save-params", t_save_params, "save final parameter bundle");

  // eval
  auto* ev = app.add_subcommand("eval", "pixel metrics and S-IoU");
  std::string e_pred, e_gt, e_inst, e_inst_classes, e_report;
  int e_classes = 0, e_ignore = -1;
  bool e_have_ignore = false;
  ev->add_option("--pred", e_pred)->required();
  ev->add_option("--gt", e_gt)->required();
  ev->add_option("--instances", e_inst);
  ev->add_option("--inst-classes", e_inst_classes);
  ev->add_option("--classes", e_classes)->required();
  auto* ig = ev->add_option("--ignore-label", e_ignore);
  ev->add_option("--report", e_report);

  // synth
  auto* sy = app.add_subcommand("synth", "generate a synthetic scene");
  uint64_t s_seed = 0;
  size_t s_h = 64, s_w = 64, s_instances = 4;
  int s_classes = 3;
  std::string s_out_dir;
  sy->add_option("--seed", s_seed);
  sy->add_option("--height", s_h)->required();
  sy->add_option("--width", s_w)->required();
  sy->add_option("--classes", s_classes)->required();
  sy->add_option("--instances", s_instances)->required();
  sy->add_option("--out-dir", s_out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (fwd->parsed()) {
      f_have_seed = seed_opt->count() > 0;
      if (f_params.empty() && !f_have_seed) {
        std::cerr << "forward: need --params or --init-seed\n";
        return 2;
      }
      if (!f_params.empty() && f_have_seed) {
        std::cerr << "forward: --params and --init-seed are exclusive\n";
        return 2;
      }
      return cmd_forward(f_input, f_params, f_init_seed, f_have_seed, f_config,
                         f_out, f_dump_q, f_dump_t);
    }
    if (gc->parsed()) return cmd_gradcheck(g_op, g_seed, g_eps, g_tol);
    if (bn->parsed())
      return cmd_bench(b_h, b_w, b_c, b_n, b_partition, b_partition_file,
                       b_json, b_seed);
    if (tt->parsed())
      return cmd_train_toy(t_steps, t_lr, t_lambda, t_seed, t_report,
                           t_save_params);
    if (ev->parsed()) {
      if (e_inst.empty() != e_inst_classes.empty()) {
        std::cerr << "eval: --instances and --inst-classes go together\n";
        return 2;
      }
      std::optional<int> ignore;
      if (ig->count() > 0) ignore = e_ignore;
      (void)e_have_ignore;
      return cmd_eval(e_pred, e_gt, e_inst, e_inst_classes, e_classes, ignore,
                      e_report);
    }
    if (sy->parsed())
      return cmd_synth(s_seed, s_h, s_w, s_classes, s_instances, s_out_dir);
  } catch (const hcnet::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
