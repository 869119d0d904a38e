#include "doctest.h"
#include "hcnet/gradcheck.hpp"
#include "hcnet/ops.hpp"
#include "hcnet/preseg.hpp"

using namespace hcnet;

TEST_CASE("preseg all-zero params give uniform Q") {
  PresegParams p;
  p.k1 = Tensor::zeros({64, 4, 3, 3});
  p.k3 = Tensor::zeros({64, 4, 3, 3});
  p.k5 = Tensor::zeros({64, 4, 3, 3});
  p.head = Tensor::zeros({3, 64, 1, 1});
  p.num_classes = 3;
  Rng rng(1);
  const Tensor f = rng.tensor_uniform({4, 5, 5}, -1, 1);
  const PresegForwardResult r = preseg_forward(f, p);
  for (size_t i = 0; i < r.q.numel(); ++i)
    CHECK(r.q[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("Q is pixel-normalized for random params") {
  Rng rng(2);
  PresegParams p = PresegParams::init(4, 5, rng);
  const Tensor f = rng.tensor_uniform({4, 6, 4}, -1, 1);
  const PresegForwardResult r = preseg_forward(f, p);
  for (size_t pix = 0; pix < 24; ++pix) {
    double s = 0;
    for (size_t c = 0; c < 5; ++c) s += r.q[c * 24 + pix];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("head copying one branch channel reproduces its argmax") {
  // head selects branch channel 0 for class 0, channel 1 for class 1
  Rng rng(3);
  PresegParams p;
  p.k1 = rng.tensor_uniform({64, 2, 3, 3}, -0.3, 0.3);
  p.k3 = rng.tensor_uniform({64, 2, 3, 3}, -0.3, 0.3);
  p.k5 = rng.tensor_uniform({64, 2, 3, 3}, -0.3, 0.3);
  p.head = Tensor::zeros({2, 64, 1, 1});
  p.head.at(0, 0, 0, 0) = 1.0;
  p.head.at(1, 1, 0, 0) = 1.0;
  p.num_classes = 2;
  const Tensor f = rng.tensor_uniform({2, 4, 4}, -1, 1);
  const PresegForwardResult r = preseg_forward(f, p);
  const Tensor t = partition(r.q);
  // scalar-loop oracle on the summed branch activations
  const Tensor s = r.cache.summed;
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = 0; j < 4; ++j) {
      const int expect = s.at(0, i, j) >= s.at(1, i, j) ? 0 : 1;
      CHECK(static_cast<int>(t.at(i, j)) == expect);
    }
}

TEST_CASE("partition argmax and tie-break") {
  Tensor q({4, 1, 1});
  q[0] = 0.0;
  q[1] = 0.5;
  q[2] = 0.0;
  q[3] = 0.5;  // tie between classes 1 and 3 -> class 1
  CHECK(partition(q)[0] == 1.0);

  // one-hot
  Tensor oh = Tensor::zeros({3, 2, 2});
  oh.at(2, 0, 0) = 1;
  oh.at(0, 0, 1) = 1;
  oh.at(1, 1, 0) = 1;
  oh.at(1, 1, 1) = 1;
  const Tensor t = partition(oh);
  CHECK(t.at(0, 0) == 2.0);
  CHECK(t.at(0, 1) == 0.0);
  CHECK(t.at(1, 0) == 1.0);

  // random case vs per-pixel scan oracle
  Rng rng(4);
  const Tensor qr = softmax_axis(rng.tensor_uniform({4, 3, 3}, -2, 2), 0);
  const Tensor tr = partition(qr);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j) {
      size_t best = 0;
      for (size_t c = 1; c < 4; ++c)
        if (qr.at(c, i, j) > qr.at(best, i, j)) best = c;
      CHECK(tr.at(i, j) == static_cast<double>(best));
    }
}

TEST_CASE("partition invariant to monotone logit transforms") {
  Rng rng(5);
  const Tensor logits = rng.tensor_uniform({3, 4, 4}, -2, 2);
  const Tensor q1 = softmax_axis(logits, 0);
  Tensor warped = logits;
  for (size_t i = 0; i < warped.numel(); ++i)
    warped[i] = 2.0 * warped[i] + 5.0;  // strictly monotone
  const Tensor q2 = softmax_axis(warped, 0);
  CHECK(max_abs_diff(partition(q1), partition(q2)) == 0.0);
}

TEST_CASE("preseg backward: zero upstream, branch-sum linearity") {
  Rng rng(6);
  PresegParams p = PresegParams::init(3, 3, rng);
  const Tensor f = rng.tensor_uniform({3, 5, 5}, -1, 1);
  PresegForwardResult r = preseg_forward(f, p);

  const Tensor zq = Tensor::zeros(r.q.shape());
  const PresegGrads g0 = preseg_backward(r.cache, p, &zq, nullptr);
  CHECK(sum_all(g0.d_k1) == 0.0);
  CHECK(sum_all(g0.d_head) == 0.0);
  CHECK(sum_all(g0.d_f) == 0.0);

  // the same logit gradient reaches each branch kernel through an
  // identical d_summed; check d_k1 equals d_k3 when kernels are equal and
  // dilation is forced equal via identical inputs -- instead verify the
  // defining property: d wrt the summed map splits into each conv backward
  const Tensor dq = rng.tensor_uniform(r.q.shape(), -1, 1);
  const PresegGrads g = preseg_backward(r.cache, p, &dq, nullptr);
  // reconstruct d_f from the three conv backwards explicitly
  const Tensor d_logits = softmax_axis_backward(r.cache.q, dq, 0);
  const Tensor head2d = p.head.reshaped({3, 64});
  const Tensor d_summed =
      matmul(transpose2d(head2d), d_logits.reshaped({3, 25})).reshaped({64, 5, 5});
  Tensor d1, d3, d5;
  conv2d_dilated_backward(f, p.k1, 1, d_summed, &d1, nullptr);
  conv2d_dilated_backward(f, p.k3, 3, d_summed, &d3, nullptr);
  conv2d_dilated_backward(f, p.k5, 5, d_summed, &d5, nullptr);
  CHECK(max_abs_diff(g.d_f, add(add(d1, d3), d5)) < 1e-12);
}

TEST_CASE("preseg gradcheck (sampled coordinates)") {
  Rng rng(7);
  const int n = 3;
  PresegParams params = PresegParams::init(4, n, rng);
  const Tensor f = rng.tensor_uniform({4, 6, 6}, -1, 1);
  // a plain sum of Q is constant (softmax), so scalarize with fixed weights
  const Tensor wgt = rng.tensor_uniform({3, 6, 6}, -1, 1);
  DiffOp op{"preseg",
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
  const GradcheckReport rep =
      gradcheck(op, {f, params.k1, params.k3, params.k5, params.head}, 1e-5,
                1e-4, 50, 7);
  CHECK(rep.passed);
}
