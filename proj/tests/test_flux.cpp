#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "cpv/flux.hpp"
#include "cpv/rng.hpp"
#include "cpv/sensor.hpp"

using namespace cpv;

namespace {
const SensorConfig kUnitFrame{1, 1.0, 1.0};  // one 1-second bin per frame
}

TEST_CASE("estimate_flux closed-form values") {
  SECTION("all frames empty") {
    const std::vector<double> t{1.0, 1.0, 1.0, 1.0};
    CHECK(estimate_flux(t, kUnitFrame) == 0.0);
  }
  SECTION("two detections over 2.75 seconds") {
    const std::vector<double> t{0.5, 1.0, 0.25, 1.0};
    CHECK_THAT(estimate_flux(t, kUnitFrame), Catch::Matchers::WithinRel(2.0 / 2.75, 1e-12));
  }
  SECTION("detection efficiency scales as a reciprocal") {
    SensorConfig half = kUnitFrame;
    half.detection_efficiency = 0.5;
    const std::vector<double> t{0.5, 1.0, 0.25, 1.0};
    CHECK_THAT(estimate_flux(t, half), Catch::Matchers::WithinRel(2.0 * 2.0 / 2.75, 1e-12));
  }
  SECTION("all-zero timestamps saturate") {
    const std::vector<double> t{0.0, 0.0};
    CHECK_THROWS_AS(estimate_flux(t, kUnitFrame), SaturationError);
  }
  SECTION("empty sequence rejected") {
    CHECK_THROWS_AS(estimate_flux(std::vector<double>{}, kUnitFrame), InputError);
  }
}

TEST_CASE("estimate_flux Monte Carlo consistency at 1e5 photons/s") {
  const SensorConfig config{8000, 256e-12, 1.0};
  const double phi = 1e5;
  const std::size_t n_frames = 10000;
  Pcg32 rng(20240810, 1);
  std::vector<double> t(n_frames);
  const double t_pf = config.frame_period();
  for (auto& ti : t) {
    const double arrival = rng.next_exponential(phi);
    ti = arrival < t_pf ? arrival : t_pf;
  }
  const double est = estimate_flux(t, config);
  CHECK(std::abs(est - phi) / phi < 0.05);
}

TEST_CASE("estimate_flux properties") {
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> dur(0.0, 1.0);
  SECTION("scale consistency: scaling all times by c divides the estimate by c") {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> t(50);
      for (auto& ti : t) ti = dur(gen);
      std::vector<double> t2(t);
      SensorConfig scaled{1, 4.0, 1.0};  // T_pf = 4 s
      for (auto& ti : t2) ti *= 4.0;
      const double a = estimate_flux(t, kUnitFrame);
      const double b = estimate_flux(t2, scaled);
      CHECK_THAT(b, Catch::Matchers::WithinRel(a / 4.0, 1e-9));
    }
  }
  SECTION("concatenation estimate lies between per-segment estimates") {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> a(20), b(30);
      for (auto& x : a) x = dur(gen);
      for (auto& x : b) x = dur(gen);
      std::vector<double> both(a);
      both.insert(both.end(), b.begin(), b.end());
      const double fa = estimate_flux(a, kUnitFrame);
      const double fb = estimate_flux(b, kUnitFrame);
      const double fab = estimate_flux(both, kUnitFrame);
      CHECK(fab >= std::min(fa, fb) - 1e-12);
      CHECK(fab <= std::max(fa, fb) + 1e-12);
    }
  }
}

TEST_CASE("estimate_flux_qis closed-form values") {
  SensorConfig config{1, 1e-6, 1.0};  // T_pf = 1 microsecond
  SECTION("no detections") {
    const std::vector<uint8_t> n(100, 0);
    CHECK(estimate_flux_qis(n, config) == 0.0);
  }
  SECTION("p_hat = 1 - exp(-1) inverts to 1e6 photons/s") {
    // 632121 of 1e6 frames detected
    std::vector<uint8_t> n(1000000, 0);
    const auto ones = static_cast<std::size_t>((1.0 - std::exp(-1.0)) * 1e6 + 0.5);
    std::fill(n.begin(), n.begin() + ones, 1);
    CHECK_THAT(estimate_flux_qis(n, config), Catch::Matchers::WithinRel(1e6, 1e-3));
  }
  SECTION("saturated stream throws") {
    const std::vector<uint8_t> n(10, 1);
    CHECK_THROWS_AS(estimate_flux_qis(n, config), SaturationError);
  }
}

TEST_CASE("timestamp and binary estimators agree at low flux") {
  // q*Phi*T_pf << 1: timing carries almost no extra information, so both
  // estimators see nearly the same data
  const SensorConfig config{8000, 256e-12, 1.0};
  const double phi = 2e3;  // q*Phi*T_pf ~ 4e-3
  Pcg32 rng(99, 5);
  const std::size_t n_frames = 2000000;
  std::vector<double> t(n_frames);
  std::vector<uint8_t> n(n_frames);
  const double t_pf = config.frame_period();
  for (std::size_t i = 0; i < n_frames; ++i) {
    const double arrival = rng.next_exponential(phi);
    t[i] = arrival < t_pf ? arrival : t_pf;
    n[i] = arrival < t_pf ? 1 : 0;
  }
  const double f_ts = estimate_flux(t, config);
  const double f_bin = estimate_flux_qis(n, config);
  CHECK(std::abs(f_ts - f_bin) / phi < 0.02);
}

TEST_CASE("flux_from_counts matches the timestamp form") {
  const SensorConfig config{1000, 1e-9, 0.8};
  // 3 detections at bins 10, 0, 999 plus 2 empty frames
  const uint64_t bins = 10 + 0 + 999 + 2000;
  const double direct = flux_from_counts(3, bins, config);
  const double t_pf = config.frame_period();
  const std::vector<double> t{10 * config.bin_width, 0.0, 999 * config.bin_width, t_pf, t_pf};
  CHECK_THAT(direct, Catch::Matchers::WithinRel(estimate_flux(t, config), 1e-12));
}
