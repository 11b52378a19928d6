#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "cpv/detect.hpp"

using namespace cpv;

namespace {
InterArrivalSeries series_from(std::vector<double> x) {
  InterArrivalSeries s;
  s.measurements = std::move(x);
  s.config = SensorConfig{1, 1.0, 1.0};
  return s;
}

std::vector<double> exp_series(std::mt19937& gen, std::size_t n, double rate) {
  std::exponential_distribution<double> d(rate);
  std::vector<double> x(n);
  for (auto& xi : x) xi = d(gen) + 1e-12;
  return x;
}
}  // namespace

TEST_CASE("detect_pelt on deterministic series") {
  SECTION("constant series keeps endpoints only") {
    const auto s = series_from(std::vector<double>(80, 0.5));
    const auto cps = detect_pelt(s, 6.0);
    CHECK(cps.boundaries == std::vector<std::size_t>{0, 80});
    CHECK(cps.interior_count() == 0);
  }
  SECTION("100x step is found at the step") {
    std::vector<double> x(50, 1.0);
    x.insert(x.end(), 50, 0.01);
    const auto cps = detect_pelt(series_from(x), 6.0);
    REQUIRE(cps.boundaries.size() == 3);
    CHECK(cps.boundaries[1] == 50);
  }
  SECTION("too-short series rejected") {
    CHECK_THROWS_AS(detect_pelt(series_from({1.0}), 1.0), InputError);
  }
}

TEST_CASE("detect_exhaustive small cases") {
  SECTION("n=2 has no interior candidates at positive penalty") {
    const auto cps = detect_exhaustive(series_from({1.0, 2.0}), 3.0);
    CHECK(cps.boundaries == std::vector<std::size_t>{0, 2});
  }
  SECTION("lambda=0 splits a generic series maximally") {
    const auto cps = detect_exhaustive(series_from({0.3, 1.7, 0.9}), 0.0);
    CHECK(cps.boundaries == std::vector<std::size_t>{0, 1, 2, 3});
  }
  SECTION("length cap") {
    CHECK_THROWS_AS(detect_exhaustive(series_from(std::vector<double>(33, 1.0)), 1.0), InputError);
  }
}

TEST_CASE("PELT matches the exhaustive oracle in objective value") {
  std::mt19937 gen(2024);
  std::uniform_int_distribution<std::size_t> len(4, 18);
  std::uniform_real_distribution<double> rate_draw(0.2, 50.0);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // 1-3 segments with random rates
    std::vector<double> x;
    const int segs = 1 + trial % 3;
    for (int k = 0; k < segs; ++k) {
      const auto seg = exp_series(gen, len(gen) / segs + 2, rate_draw(gen));
      x.insert(x.end(), seg.begin(), seg.end());
    }
    const auto s = series_from(x);
    const ExponentialCost cost(s);
    for (double penalty : {1.0, 3.0, 6.0, 12.0}) {
      const auto fast = detect_pelt(s, penalty);
      const auto oracle = detect_exhaustive(s, penalty);
      const double obj_fast = changepoint_objective(cost, fast, penalty);
      const double obj_oracle = changepoint_objective(cost, oracle, penalty);
      CHECK_THAT(obj_fast, Catch::Matchers::WithinAbs(obj_oracle, 1e-9));
      ++checked;
    }
  }
  CHECK(checked == 800);
}

TEST_CASE("BottomUp agrees with PELT on an easy step") {
  std::vector<double> x(50, 1.0);
  x.insert(x.end(), 50, 0.01);
  const auto s = series_from(x);
  const auto pelt = detect_pelt(s, 6.0);
  const auto bu = detect_bottomup(s, 6.0);
  CHECK(bu.boundaries == pelt.boundaries);
}

TEST_CASE("BottomUp keeps endpoints only on a constant series") {
  const auto s = series_from(std::vector<double>(101, 0.25));
  const auto cps = detect_bottomup(s, 6.0);
  CHECK(cps.boundaries == std::vector<std::size_t>{0, 101});
}

TEST_CASE("changepoint count is non-increasing in the penalty") {
  std::mt19937 gen(99);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x = exp_series(gen, 60, 1.0);
    auto seg2 = exp_series(gen, 60, 25.0);
    x.insert(x.end(), seg2.begin(), seg2.end());
    auto seg3 = exp_series(gen, 60, 0.2);
    x.insert(x.end(), seg3.begin(), seg3.end());
    const auto s = series_from(x);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double penalty : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      const auto cps = detect_pelt(s, penalty);
      CHECK(cps.count() <= prev);
      prev = cps.count();
    }
  }
}

TEST_CASE("objective at the PELT optimum never exceeds random segmentations") {
  std::mt19937 gen(5);
  const auto x = exp_series(gen, 20, 2.0);
  const auto s = series_from(x);
  const ExponentialCost cost(s);
  const double penalty = 3.0;
  const auto best = detect_pelt(s, penalty);
  const double best_obj = changepoint_objective(cost, best, penalty);
  std::uniform_int_distribution<std::size_t> pick(1, 19);
  for (int trial = 0; trial < 200; ++trial) {
    std::set<std::size_t> interior;
    const int k = trial % 4;
    for (int i = 0; i < k; ++i) interior.insert(pick(gen));
    ChangepointSet other;
    other.boundaries.push_back(0);
    other.boundaries.insert(other.boundaries.end(), interior.begin(), interior.end());
    other.boundaries.push_back(20);
    CHECK(best_obj <= changepoint_objective(cost, other, penalty) + 1e-9);
  }
}

TEST_CASE("QIS detectors find a detection-rate step") {
  std::mt19937 gen(31);
  std::bernoulli_distribution lo(0.05), hi(0.9);
  std::vector<uint8_t> n;
  for (int i = 0; i < 120; ++i) n.push_back(lo(gen));
  for (int i = 0; i < 120; ++i) n.push_back(hi(gen));
  const auto pelt = detect_pelt_qis(n, 6.0);
  REQUIRE(pelt.interior_count() == 1);
  CHECK(std::abs(static_cast<long>(pelt.boundaries[1]) - 120L) <= 2);
  const auto oracle_obj = changepoint_objective(BernoulliCost(n), pelt, 6.0);
  const auto bu = detect_bottomup_qis(n, 6.0);
  CHECK(changepoint_objective(BernoulliCost(n), bu, 6.0) >= oracle_obj - 1e-9);
}
