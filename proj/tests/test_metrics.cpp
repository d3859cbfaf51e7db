#include <doctest.h>

#include "oracles.hpp"
#include "stereokit/metrics.hpp"

using namespace stereokit;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("perfect estimates score zero") {
  Rng rng(61);
  Tensor<float> v = oracles::rand_tensor(rng, {8, 8}, 0.0f, 50.0f);
  DisparityMap m(v);
  CHECK(d1_all(m, m) == 0.0);
  CHECK(d1_all(m, m, OutlierRule::and_rule) == 0.0);
  CHECK(epe(m, m) == 0.0);
}

TEST_CASE("worked single-pixel case: 4px on 100px") {
  DisparityMap est(Tensor<float>({1, 1}, {104.0f}));
  DisparityMap gt(Tensor<float>({1, 1}, {100.0f}));
  CHECK(d1_all(est, gt, OutlierRule::or_rule) == 100.0);   // 4 >= 3
  CHECK(d1_all(est, gt, OutlierRule::and_rule) == 0.0);    // 4 < 5% of 100
  CHECK(epe(est, gt) == doctest::Approx(4.0));
}

TEST_CASE("uniform +1 offset gives EPE 1") {
  Rng rng(62);
  Tensor<float> v = oracles::rand_tensor(rng, {6, 6}, 10.0f, 40.0f);
  Tensor<float> off = v.clone();
  for (std::int64_t i = 0; i < off.size(); ++i) off[i] += 1.0f;
  CHECK(epe(DisparityMap(off), DisparityMap(v)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("matches the naive per-pixel oracle on random maps") {
  Rng rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    Tensor<float> ev = oracles::rand_tensor(rng, {16, 16}, 0.0f, 60.0f);
    Tensor<float> gv = oracles::rand_tensor(rng, {16, 16}, 0.0f, 60.0f);
    std::vector<std::uint8_t> mask(256);
    for (auto& b : mask) b = rng.bernoulli(0.7) ? 1 : 0;
    mask[0] = 1;
    DisparityMap est(ev);
    DisparityMap gt(gv, mask);
    const double d_or = d1_all(est, gt, OutlierRule::or_rule);
    const double d_and = d1_all(est, gt, OutlierRule::and_rule);
    REQUIRE(d_or == oracles::d1_all(est, gt, false));
    REQUIRE(d_and == oracles::d1_all(est, gt, true));
    REQUIRE(epe(est, gt) == doctest::Approx(oracles::epe(est, gt)).epsilon(1e-6));
    // the or-rule outlier set contains the and-rule set
    REQUIRE(d_or >= d_and);
  }
}

TEST_CASE("masked-out pixels cannot affect the metrics") {
  Rng rng(64);
  Tensor<float> ev = oracles::rand_tensor(rng, {8, 8}, 0.0f, 30.0f);
  Tensor<float> gv = oracles::rand_tensor(rng, {8, 8}, 0.0f, 30.0f);
  std::vector<std::uint8_t> mask(64, 0);
  for (int i = 0; i < 64; i += 2) mask[static_cast<std::size_t>(i)] = 1;
  DisparityMap gt(gv.clone(), mask);
  Tensor<float> ev2 = ev.clone();
  for (int i = 1; i < 64; i += 2) ev2[i] = 1e6f;
  CHECK(d1_all(DisparityMap(ev), gt) == d1_all(DisparityMap(ev2), gt));
  CHECK(epe(DisparityMap(ev), gt) == epe(DisparityMap(ev2), gt));
}

TEST_CASE("an empty mask is an error") {
  DisparityMap est(Tensor<float>({2, 2}));
  DisparityMap gt(Tensor<float>({2, 2}), std::vector<std::uint8_t>{0, 0, 0, 0});
  CHECK_THROWS_AS(d1_all(est, gt), std::invalid_argument);
  CHECK_THROWS_AS(epe(est, gt), std::invalid_argument);
  DisparityMap wrong(Tensor<float>({3, 2}));
  CHECK_THROWS_AS(d1_all(wrong, gt), std::invalid_argument);
}

TEST_SUITE_END();
