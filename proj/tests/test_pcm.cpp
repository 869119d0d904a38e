#include "doctest.h"
#include "hcnet/gradcheck.hpp"
#include "hcnet/ops.hpp"
#include "hcnet/pcm.hpp"

using namespace hcnet;

TEST_CASE("build_region_index basics") {
  const Tensor t0 = Tensor::zeros({2, 2}, DType::u16);
  const RegionIndex i0 = build_region_index(t0, 3);
  CHECK(i0.pixels[0] == std::vector<uint32_t>{0, 1, 2, 3});
  CHECK(i0.pixels[1].empty());
  CHECK(i0.pixels[2].empty());

  const Tensor chk = Tensor::from({2, 2}, {0, 1, 1, 0}, DType::u16);
  const RegionIndex ic = build_region_index(chk, 2);
  CHECK(ic.pixels[0] == std::vector<uint32_t>{0, 3});
  CHECK(ic.pixels[1] == std::vector<uint32_t>{1, 2});
  CHECK(ic.sizes() == std::vector<size_t>{2, 2});

  const Tensor bad = Tensor::from({1, 2}, {0, 5}, DType::u16);
  CHECK_THROWS_AS(build_region_index(bad, 3), ValueError);
}

TEST_CASE("gather/scatter round trip") {
  Rng rng(1);
  const Tensor x = rng.tensor_uniform({3, 2, 2}, -1, 1);
  const Tensor t = Tensor::from({2, 2}, {0, 1, 1, 0}, DType::u16);
  const RegionIndex idx = build_region_index(t, 2);

  const Tensor b0 = gather_region(x, idx.pixels[0]);
  CHECK(b0.at(0, 0) == x.at(0, 0, 0));
  CHECK(b0.at(0, 1) == x.at(0, 1, 1));

  Tensor back = Tensor::zeros(x.shape());
  scatter_region(back, idx.pixels[0], b0);
  scatter_region(back, idx.pixels[1], gather_region(x, idx.pixels[1]));
  CHECK(max_abs_diff(back, x) == 0.0);

  // constant T: single region equals X flattened
  const Tensor all0 = Tensor::zeros({2, 2}, DType::u16);
  const RegionIndex ia = build_region_index(all0, 1);
  const Tensor bfull = gather_region(x, ia.pixels[0]);
  CHECK(max_abs_diff(bfull, x.reshaped({3, 4})) == 0.0);
}

TEST_CASE("pcm alpha=0 is exact identity") {
  Rng rng(2);
  PiamParams p = PiamParams::init(8, rng);
  const Tensor x = rng.tensor_uniform({8, 4, 4}, -1, 1);
  Tensor t({4, 4}, DType::u16);
  for (size_t i = 0; i < 16; ++i) t[i] = static_cast<double>(i % 3);
  const PcmForwardResult r = pcm_forward(x, t, p);
  CHECK(max_abs_diff(r.out, x) == 0.0);
}

TEST_CASE("single all-covering region equals dense piam") {
  Rng rng(3);
  PiamParams p = PiamParams::init(8, rng);
  p.alpha = 0.7;
  const Tensor x = rng.tensor_uniform({8, 5, 5}, -1, 1);
  const Tensor t = Tensor::zeros({5, 5}, DType::u16);
  const PcmForwardResult r = pcm_forward(x, t, p);
  const PiamForwardResult dense = piam_forward(x.reshaped({8, 25}), p);
  CHECK(max_abs_diff(r.out.reshaped({8, 25}), dense.out) < 1e-6);
}

TEST_CASE("identical regions produce identical outputs") {
  Rng rng(4);
  PiamParams p = PiamParams::init(4, rng);
  p.alpha = 0.5;
  // two rows; row 0 is region 0, row 1 is region 1, contents identical
  Tensor x({4, 2, 3});
  for (size_t c = 0; c < 4; ++c)
    for (size_t j = 0; j < 3; ++j) {
      const double v = rng.uniform(-1, 1);
      x.at(c, 0, j) = v;
      x.at(c, 1, j) = v;
    }
  Tensor t({2, 3}, DType::u16);
  for (size_t j = 0; j < 3; ++j) {
    t.at(0, j) = 0;
    t.at(1, j) = 1;
  }
  const PcmForwardResult r = pcm_forward(x, t, p);
  for (size_t c = 0; c < 4; ++c)
    for (size_t j = 0; j < 3; ++j)
      CHECK(r.out.at(c, 0, j) == doctest::Approx(r.out.at(c, 1, j)).epsilon(1e-12));
}

TEST_CASE("relabeling classes leaves the output unchanged") {
  Rng rng(5);
  PiamParams p = PiamParams::init(4, rng);
  p.alpha = 0.4;
  const Tensor x = rng.tensor_uniform({4, 4, 4}, -1, 1);
  Tensor t({4, 4}, DType::u16);
  for (size_t i = 0; i < 16; ++i) t[i] = static_cast<double>(i % 3);
  Tensor t_swapped = t;  // swap labels 0 <-> 2
  for (size_t i = 0; i < 16; ++i)
    t_swapped[i] = (t[i] == 0.0) ? 2.0 : (t[i] == 2.0 ? 0.0 : t[i]);
  const PcmForwardResult a = pcm_forward(x, t, p);
  const PcmForwardResult b = pcm_forward(x, t_swapped, p);
  CHECK(max_abs_diff(a.out, b.out) == 0.0);
}

TEST_CASE("zero leak across regions") {
  Rng rng(6);
  PiamParams p = PiamParams::init(4, rng);
  p.alpha = 0.9;
  Tensor x = rng.tensor_uniform({4, 4, 4}, -1, 1);
  Tensor t({4, 4}, DType::u16);
  for (size_t i = 0; i < 16; ++i) t[i] = (i < 8) ? 0.0 : 1.0;
  const PcmForwardResult base = pcm_forward(x, t, p);

  // perturb a pixel of region 0; region 1 outputs must not move at all
  x.at(2, 0, 1) += 0.123;
  const PcmForwardResult pert = pcm_forward(x, t, p);
  for (size_t c = 0; c < 4; ++c)
    for (size_t i = 8; i < 16; ++i)
      CHECK(base.out[c * 16 + i] == pert.out[c * 16 + i]);
}

TEST_CASE("pcm backward zero upstream and gradcheck") {
  Rng rng(7);
  PiamParams params = PiamParams::init(8, rng);
  params.alpha = 0.3;
  const Tensor x = rng.tensor_uniform({8, 6, 6}, -1, 1);
  Tensor t({6, 6}, DType::u16);
  for (size_t i = 0; i < 36; ++i)
    t[i] = static_cast<double>(rng.uniform_int(3));

  PcmForwardResult f = pcm_forward(x, t, params);
  const PcmGrads z = pcm_backward(f.cache, params, Tensor::zeros(x.shape()));
  CHECK(sum_all(z.d_x) == 0.0);
  CHECK(sum_all(z.d_w_o) == 0.0);
  CHECK(z.d_alpha == 0.0);

  DiffOp op{"pcm",
            [&](const std::vector<Tensor>& in) {
              PiamParams p{in[1], in[2], in[3][0]};
              return pcm_forward(in[0], t, p).out;
            },
            [&](const std::vector<Tensor>& in) {
              PiamParams p{in[1], in[2], in[3][0]};
              PcmForwardResult r = pcm_forward(in[0], t, p);
              PcmGrads g =
                  pcm_backward(r.cache, p, Tensor::full(r.out.shape(), 1.0));
              return std::vector<Tensor>{g.d_x, g.d_w_o, g.d_w_p,
                                         Tensor::from({1}, {g.d_alpha})};
            }};
  const GradcheckReport rep =
      gradcheck(op, {x, params.w_o, params.w_p,
                     Tensor::from({1}, {params.alpha})});
  CHECK(rep.passed);
  CHECK(rep.max_rel_err < 1e-4);
}

TEST_CASE("single-region backward equals dense piam backward") {
  Rng rng(8);
  PiamParams p = PiamParams::init(8, rng);
  p.alpha = 0.6;
  const Tensor x = rng.tensor_uniform({8, 4, 4}, -1, 1);
  const Tensor t = Tensor::zeros({4, 4}, DType::u16);
  const Tensor d_out = rng.tensor_uniform({8, 4, 4}, -1, 1);

  PcmForwardResult f = pcm_forward(x, t, p);
  const PcmGrads g = pcm_backward(f.cache, p, d_out);

  PiamForwardResult df = piam_forward(x.reshaped({8, 16}), p);
  const PiamGrads dg = piam_backward(df.cache, p, d_out.reshaped({8, 16}));
  CHECK(max_abs_diff(g.d_x.reshaped({8, 16}), dg.d_b) < 1e-10);
  CHECK(max_abs_diff(g.d_w_o, dg.d_w_o) < 1e-10);
  CHECK(g.d_alpha == doctest::Approx(dg.d_alpha).epsilon(1e-12));
}
