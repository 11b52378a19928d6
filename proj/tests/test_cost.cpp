#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cpv/cost.hpp"

using namespace cpv;

namespace {
InterArrivalSeries series_from(std::vector<double> x) {
  InterArrivalSeries s;
  s.measurements = std::move(x);
  s.config = SensorConfig{1, 1.0, 1.0};
  return s;
}
}  // namespace

TEST_CASE("segment_cost closed forms") {
  SECTION("unit rate costs zero") {
    const auto s = series_from({1.0, 1.0});
    CHECK(segment_cost(s, 0, 2) == 0.0);
  }
  SECTION("rate 2 over two measurements") {
    const auto s = series_from({0.5, 0.5});
    CHECK_THAT(segment_cost(s, 0, 2), Catch::Matchers::WithinAbs(-2.0 * std::log(2.0), 1e-12));
  }
  SECTION("bounds checked") {
    const auto s = series_from({1.0, 1.0});
    CHECK_THROWS_AS(segment_cost(s, 1, 1), InputError);
    CHECK_THROWS_AS(segment_cost(s, 0, 3), InputError);
  }
  SECTION("zero duration saturates") {
    const auto s = series_from({0.0, 0.0});
    CHECK_THROWS_AS(segment_cost(s, 0, 2), SaturationError);
  }
}

TEST_CASE("segment_cost subadditivity: splitting never increases total cost") {
  std::mt19937 gen(42);
  std::exponential_distribution<double> exp_draw(3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(30);
    for (auto& xi : x) xi = exp_draw(gen) + 1e-9;
    const auto s = series_from(x);
    const ExponentialCost cost(s);
    for (std::size_t k = 1; k < x.size(); ++k) {
      CHECK(cost.cost(0, x.size()) >= cost.cost(0, k) + cost.cost(k, x.size()) - 1e-9);
    }
  }
}

TEST_CASE("segment_cost is permutation invariant within a segment") {
  std::mt19937 gen(7);
  std::vector<double> x{0.3, 1.2, 0.05, 2.0, 0.7};
  const double before = segment_cost(series_from(x), 0, x.size());
  for (int shuffle = 0; shuffle < 10; ++shuffle) {
    std::shuffle(x.begin(), x.end(), gen);
    CHECK_THAT(segment_cost(series_from(x), 0, x.size()),
               Catch::Matchers::WithinAbs(before, 1e-12));
  }
}

TEST_CASE("segment_cost_qis closed forms") {
  SECTION("pure segments cost zero") {
    const std::vector<uint8_t> zeros(8, 0), ones(8, 1);
    CHECK(segment_cost_qis(zeros, 0, 8) == 0.0);
    CHECK(segment_cost_qis(ones, 0, 8) == 0.0);
  }
  SECTION("half detections") {
    const std::vector<uint8_t> n{1, 0, 1, 0};
    CHECK_THAT(segment_cost_qis(n, 0, 4), Catch::Matchers::WithinAbs(4.0 * std::log(2.0), 1e-12));
  }
  SECTION("equals m times the binary entropy of p_hat in nats") {
    const std::vector<uint8_t> n{1, 1, 0, 1, 0, 0, 0, 1, 1, 0};
    const double p = 0.5;
    const double entropy = -(p * std::log(p) + (1 - p) * std::log(1 - p));
    CHECK_THAT(segment_cost_qis(n, 0, 10), Catch::Matchers::WithinAbs(10.0 * entropy, 1e-12));
  }
  SECTION("binary values enforced") {
    const std::vector<uint8_t> n{1, 2};
    CHECK_THROWS_AS(segment_cost_qis(n, 0, 2), InputError);
  }
}

TEST_CASE("bernoulli cost subadditivity") {
  std::mt19937 gen(11);
  std::bernoulli_distribution coin(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<uint8_t> n(40);
    for (auto& ni : n) ni = coin(gen);
    const BernoulliCost cost(n);
    for (std::size_t k = 1; k < n.size(); ++k)
      CHECK(cost.cost(0, n.size()) >= cost.cost(0, k) + cost.cost(k, n.size()) - 1e-9);
  }
}
