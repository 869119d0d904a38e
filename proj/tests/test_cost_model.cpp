#include <numeric>

#include "doctest.h"
#include "hcnet/cost_model.hpp"

using namespace hcnet;

TEST_CASE("dense count hand case h=w=4 c=8") {
  const CostComponents d = count_dense(4, 4, 8);
  // K = 16, C/4 = 2: proj 2*2*8*16 = 512, corr 2*256 = 512,
  // agg 8*256 = 2048, resid 8*16 = 128
  CHECK(d.projections == 512);
  CHECK(d.correlation == 512);
  CHECK(d.aggregation == 2048);
  CHECK(d.residual == 128);
  CHECK(d.total == 3200);
  CHECK(d.attn_bytes == 1024);
  CHECK_THROWS_AS(count_dense(4, 4, 6), ValueError);
}

TEST_CASE("hier count hand case") {
  // h=w=2, c=4, regions {2,2}, n=2
  const HierCost hc = count_hier({2, 2}, 2, 4, 2, 2);
  // per region K=2: proj 16, corr 4, agg 16, resid 8 -> 44 each
  CHECK(hc.pcm.total == 88);
  CHECK(hc.pcm.attn_bytes == 32);
  // rcm: pool/unpool 2*4*2*4 = 64, proj 16, corr 4, agg 16, resid 8
  CHECK(hc.rcm.pool_unpool == 64);
  CHECK(hc.rcm.total == 108);
  CHECK(hc.rcm.attn_bytes == 16);
  CHECK(hc.total == 196);
  CHECK(hc.attn_bytes == 48);
}

TEST_CASE("hier count rejects bad partitions and skips empty regions") {
  CHECK_THROWS_AS(count_hier({2, 1}, 2, 4, 2, 2), ValueError);
  const HierCost a = count_hier({4, 0}, 2, 4, 2, 2);
  const HierCost b = count_hier({4}, 2, 4, 2, 2);
  CHECK(a.pcm.total == b.pcm.total);
  CHECK(a.attn_bytes == b.attn_bytes);
}

TEST_CASE("single full region matches the dense PiAM cost") {
  const CostComponents d = count_dense(4, 4, 8);
  const HierCost hc = count_hier({16}, 3, 8, 4, 4);
  CHECK(hc.pcm.total == d.total);
  CHECK(hc.pcm.attn_bytes == d.attn_bytes);
}

TEST_CASE("balanced partition") {
  CHECK(balanced_partition(10, 2) == std::vector<size_t>{5, 5});
  CHECK(balanced_partition(10, 3) == std::vector<size_t>{4, 3, 3});
  const auto p = balanced_partition(1024, 8);
  for (size_t s : p) CHECK(s == 128);
  CHECK_THROWS_AS(balanced_partition(2, 5), ValueError);
}

TEST_CASE("random partition sums to the total") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = random_partition(777, 5, rng);
    CHECK(p.size() == 5);
    CHECK(std::accumulate(p.begin(), p.end(), size_t{0}) == 777);
  }
}

TEST_CASE("balanced partition minimizes MAC count over random ones") {
  const size_t hw = 64 * 16, c = 8, n = 8;
  const uint64_t bal =
      count_hier(balanced_partition(hw, n), n, c, 64, 16).total;
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_partition(hw, n, rng);
    CHECK(count_hier(p, n, c, 64, 16).total >= bal);
  }
}

TEST_CASE("hier total is strictly below dense for balanced multi-region maps") {
  for (size_t n : {2, 4, 8}) {
    const CostReport r =
        make_cost_report(16, 16, 8, balanced_partition(256, n), n);
    CHECK(r.macs_total < r.macs_dense);
    CHECK(r.bytes_attn_hier < r.bytes_attn_dense);
    CHECK(r.ratio < 1.0);
  }
}

TEST_CASE("instrumented kernels reproduce the analytic counts") {
  Rng rng(5);
  {
    VerifyReport rep = verify_counts(6, 6, 8, 3, {12, 12, 12}, rng);
    INFO(rep.detail);
    CHECK(rep.match);
  }
  {
    VerifyReport rep = verify_counts(5, 4, 4, 2, {3, 17}, rng);
    INFO(rep.detail);
    CHECK(rep.match);
  }
  {
    // an empty region must cost nothing in both views
    VerifyReport rep = verify_counts(4, 4, 8, 3, {16, 0, 0}, rng);
    INFO(rep.detail);
    CHECK(rep.match);
  }
}
