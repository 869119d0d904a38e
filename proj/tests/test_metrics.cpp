#include <cmath>
#include <map>

#include "doctest.h"
#include "hcnet/metrics.hpp"

using namespace hcnet;

TEST_CASE("confusion hand case") {
  // pred 1x4: [0,1,1,2], gt: [0,1,2,2]
  const Tensor pred = Tensor::from({1, 4}, {0, 1, 1, 2}, DType::u16);
  const Tensor gt = Tensor::from({1, 4}, {0, 1, 2, 2}, DType::u16);
  const ConfusionCounts c = confusion(pred, gt, 3);
  CHECK(c.valid_pixels == 4);
  CHECK(c.mat(0, 0) == 1);
  CHECK(c.mat(1, 1) == 1);
  CHECK(c.mat(2, 1) == 1);
  CHECK(c.mat(2, 2) == 1);
  CHECK(c.tp[2] == 1);
  CHECK(c.fn[2] == 1);
  CHECK(c.fp[2] == 0);
  CHECK(c.fp[1] == 1);
  CHECK(c.tn[0] == 3);
}

TEST_CASE("confusion respects ignore_label") {
  const Tensor pred = Tensor::from({1, 4}, {0, 1, 1, 0}, DType::u16);
  const Tensor gt = Tensor::from({1, 4}, {0, 2, 1, 0}, DType::u16);
  const ConfusionCounts c = confusion(pred, gt, 3, 2);
  CHECK(c.valid_pixels == 3);
  CHECK(c.mat(2, 1) == 0);
  CHECK(c.tp[0] == 2);
}

TEST_CASE("iou and f1 arithmetic") {
  // per class: tp/(tp+fp+fn)
  const Tensor pred = Tensor::from({1, 5}, {0, 0, 1, 1, 1}, DType::u16);
  const Tensor gt = Tensor::from({1, 5}, {0, 1, 1, 1, 0}, DType::u16);
  const ConfusionCounts c = confusion(pred, gt, 2);
  const IouResult iou = iou_per_class(c);
  // class 0: tp=1 fp=1 fn=1 -> 1/3; class 1: tp=2 fp=1 fn=1 -> 2/4
  CHECK(iou.per_class[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(iou.per_class[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(iou.miou == doctest::Approx((1.0 / 3.0 + 0.5) / 2.0).epsilon(1e-12));

  const F1Result f1 = f1_oa(c);
  // f1 = 2tp/(2tp+fp+fn): class 0 -> 2/4, class 1 -> 4/6
  CHECK(f1.per_class[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f1.per_class[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(f1.oa == doctest::Approx(3.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("perfect prediction scores 1 everywhere") {
  const Tensor gt = Tensor::from({2, 3}, {0, 1, 2, 2, 1, 0}, DType::u16);
  const ConfusionCounts c = confusion(gt, gt, 3);
  const IouResult iou = iou_per_class(c);
  const F1Result f1 = f1_oa(c);
  CHECK(iou.miou == 1.0);
  CHECK(f1.oa == 1.0);
  for (int k = 0; k < 3; ++k) {
    CHECK(iou.per_class[k] == 1.0);
    CHECK(f1.per_class[k] == 1.0);
  }
}

TEST_CASE("absent classes are excluded from mIoU") {
  const Tensor pred = Tensor::from({1, 2}, {0, 0}, DType::u16);
  const Tensor gt = Tensor::from({1, 2}, {0, 0}, DType::u16);
  const ConfusionCounts c = confusion(pred, gt, 3);
  const IouResult iou = iou_per_class(c);
  CHECK(iou.per_class[1] == -1.0);
  CHECK(iou.per_class[2] == -1.0);
  CHECK(iou.miou == 1.0);
}

TEST_CASE("0.8-overlap fixture gives IoU and F1 closed forms") {
  // gt: 10 pixels class 1 of 20; pred covers 8 of them plus 0 false positives
  Tensor gt = Tensor::zeros({1, 20}, DType::u16);
  Tensor pred = Tensor::zeros({1, 20}, DType::u16);
  for (size_t i = 0; i < 10; ++i) gt[i] = 1;
  for (size_t i = 0; i < 8; ++i) pred[i] = 1;
  const ConfusionCounts c = confusion(pred, gt, 2);
  const IouResult iou = iou_per_class(c);
  CHECK(iou.per_class[1] == doctest::Approx(0.8).epsilon(1e-12));
  const F1Result f1 = f1_oa(c);
  CHECK(f1.per_class[1] == doctest::Approx(16.0 / 18.0).epsilon(1e-12));
}

TEST_CASE("siou buckets") {
  CHECK(siou_bucket(0) == 0);
  CHECK(siou_bucket(2499) == 0);
  CHECK(siou_bucket(2500) == 1);
  CHECK(siou_bucket(62499) == 1);
  CHECK(siou_bucket(62500) == 2);
  CHECK(siou_bucket(1000000) == 2);
}

TEST_CASE("connected components 4 vs 8") {
  // two diagonal pixels: separate under 4-connectivity, joined under 8
  Tensor pred = Tensor::zeros({3, 3}, DType::u16);
  pred.at(0, 0) = 1;
  pred.at(1, 1) = 1;
  uint32_t n4 = 0, n8 = 0;
  const auto l4 = connected_components(pred, 1, 4, &n4);
  const auto l8 = connected_components(pred, 1, 8, &n8);
  CHECK(n4 == 2);
  CHECK(n8 == 1);
  CHECK(l4[0] != l4[4]);
  CHECK(l8[0] == l8[4]);
}

TEST_CASE("s_iou 2/3 hand case") {
  // instance: 4-pixel square of class 1; prediction covers 2 of those plus
  // 1 adjacent extra pixel in the same component: |S n P| = 2, |S u P| = 5?
  // Build: intersection 2, union 3 -> 2/3 (pred component exactly 2 inside +
  // 0 outside, instance has 3 pixels)
  Tensor pred = Tensor::zeros({2, 3}, DType::u16);
  Tensor inst = Tensor::zeros({2, 3}, DType::u32);
  // instance 1 (class 1): pixels (0,0),(0,1),(0,2)
  inst.at(0, 0) = 1;
  inst.at(0, 1) = 1;
  inst.at(0, 2) = 1;
  // prediction of class 1 at (0,0),(0,1) only
  pred.at(0, 0) = 1;
  pred.at(0, 1) = 1;
  std::map<uint32_t, int> cls{{1, 1}};
  const SIoUReport rep = s_iou(pred, inst, cls);
  REQUIRE(rep.records.size() == 1);
  CHECK(rep.records[0].s_iou == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(rep.records[0].area == 3);
  CHECK(rep.records[0].bucket == 0);
  CHECK(rep.overall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("s_iou only counts components touching the instance") {
  // distant same-class component must not hurt the score in components mode
  Tensor pred = Tensor::zeros({1, 7}, DType::u16);
  Tensor inst = Tensor::zeros({1, 7}, DType::u32);
  inst[0] = 1;
  inst[1] = 1;
  pred[0] = 1;
  pred[1] = 1;
  pred[5] = 1;  // far away, disconnected
  std::map<uint32_t, int> cls{{1, 1}};
  const SIoUReport comp = s_iou(pred, inst, cls, 4, SiouMatch::components);
  CHECK(comp.records[0].s_iou == doctest::Approx(1.0).epsilon(1e-12));
  const SIoUReport cm = s_iou(pred, inst, cls, 4, SiouMatch::classmap);
  CHECK(cm.records[0].s_iou == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("s_iou monotone in overlap") {
  // growing the correctly predicted part of an instance never lowers s-iou
  Tensor inst = Tensor::zeros({1, 10}, DType::u32);
  for (size_t i = 0; i < 8; ++i) inst[i] = 1;
  std::map<uint32_t, int> cls{{1, 1}};
  double prev = -1;
  for (size_t covered = 1; covered <= 8; ++covered) {
    Tensor pred = Tensor::zeros({1, 10}, DType::u16);
    for (size_t i = 0; i < covered; ++i) pred[i] = 1;
    const double s = s_iou(pred, inst, cls).records[0].s_iou;
    CHECK(s >= prev);
    prev = s;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("s_iou bucket means are unweighted per-bucket averages") {
  // three instances in distinct buckets, sizes 4 / 2500 / 62500, with gaps
  // between them so their predicted components stay disconnected
  const size_t h = 310, w = 310;
  Tensor pred = Tensor::zeros({h, w}, DType::u16);
  Tensor inst = Tensor::zeros({h, w}, DType::u32);
  auto fill = [&](size_t r0, size_t c0, size_t hh, size_t ww, uint32_t id) {
    for (size_t r = r0; r < r0 + hh; ++r)
      for (size_t c = c0; c < c0 + ww; ++c) {
        inst.at(r, c) = id;
        pred.at(r, c) = 1;
      }
  };
  fill(0, 0, 2, 2, 1);        // area 4 -> bucket 0
  fill(0, 10, 50, 50, 2);     // area 2500 -> bucket 1
  fill(55, 0, 250, 250, 3);   // area 62500 -> bucket 2
  std::map<uint32_t, int> cls{{1, 1}, {2, 1}, {3, 1}};
  const SIoUReport rep = s_iou(pred, inst, cls);
  REQUIRE(rep.records.size() == 3);
  CHECK(rep.records[0].bucket == 0);
  CHECK(rep.records[1].bucket == 1);
  CHECK(rep.records[2].bucket == 2);
  for (int b = 0; b < 3; ++b) {
    CHECK(rep.bucket_count[b] == 1);
    // every instance is fully and exactly covered by a touching component
    CHECK(rep.bucket_mean[b] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(rep.overall == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero-pixel instance id raises") {
  Tensor pred = Tensor::zeros({2, 2}, DType::u16);
  Tensor inst = Tensor::zeros({2, 2}, DType::u32);
  std::map<uint32_t, int> cls{{7, 1}};  // id 7 never appears
  CHECK_THROWS_AS(s_iou(pred, inst, cls), ValueError);
}
