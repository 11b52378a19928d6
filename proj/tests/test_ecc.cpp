#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cpv/ecc.hpp"
#include "cpv/rng.hpp"
#include "cpv/scenes.hpp"
#include "cpv/warp.hpp"

using namespace cpv;

namespace {
EuclideanTransform centered(int size) {
  return EuclideanTransform::identity((size - 1) / 2.0, (size - 1) / 2.0);
}
}  // namespace

TEST_CASE("identical images align to the identity with ECC 1") {
  const auto img = speckle_scene(64, 1);
  const auto res = ecc_align(img, img, centered(64));
  CHECK(res.converged);
  CHECK_THAT(res.ecc, Catch::Matchers::WithinAbs(1.0, 1e-9));
  CHECK(std::abs(res.transform.theta) < 1e-6);
  CHECK(std::abs(res.transform.tx) < 1e-4);
  CHECK(std::abs(res.transform.ty) < 1e-4);
}

TEST_CASE("pure translations are recovered within a quarter pixel") {
  const auto img = speckle_scene(96, 2);
  Pcg32 rng(44, 0);
  for (int trial = 0; trial < 8; ++trial) {
    EuclideanTransform truth = centered(96);
    truth.tx = -5.0 + 10.0 * rng.next_double();
    truth.ty = -5.0 + 10.0 * rng.next_double();
    const auto moved = warp_image(img, truth);
    const auto res = ecc_align(img, moved, centered(96));
    CHECK(std::abs(res.transform.tx - truth.tx) < 0.25);
    CHECK(std::abs(res.transform.ty - truth.ty) < 0.25);
    CHECK(res.ecc > 0.97);
  }
}

TEST_CASE("small rotations are recovered by single-level ECC") {
  const auto img = speckle_scene(96, 3);
  for (double degrees : {-4.0, -1.0, 1.0, 4.0}) {
    EuclideanTransform truth = centered(96);
    truth.theta = degrees * M_PI / 180.0;
    const auto moved = warp_image(img, truth);
    const auto res = ecc_align(img, moved, centered(96));
    CHECK(std::abs(res.transform.theta - truth.theta) * 180.0 / M_PI < 0.2);
  }
}

TEST_CASE("rotations up to 10 degrees are recovered with the pyramid") {
  const auto img = speckle_scene(96, 3);
  for (double degrees : {-10.0, -7.0, 7.0, 10.0}) {
    EuclideanTransform truth = centered(96);
    truth.theta = degrees * M_PI / 180.0;
    const auto moved = warp_image(img, truth);
    const auto res = ecc_align_pyramid(img, moved, centered(96));
    CHECK(std::abs(res.transform.theta - truth.theta) * 180.0 / M_PI < 0.2);
    CHECK(std::abs(res.transform.tx) < 0.25);
    CHECK(std::abs(res.transform.ty) < 0.25);
  }
}

TEST_CASE("combined motion with a warm start") {
  const auto img = orange_scene(96, 5);
  EuclideanTransform truth = centered(96);
  truth.theta = 3.0 * M_PI / 180.0;
  truth.tx = 2.0;
  truth.ty = -1.5;
  const auto moved = warp_image(img, truth);
  EuclideanTransform init = centered(96);
  init.theta = 2.0 * M_PI / 180.0;  // close but not exact
  const auto res = ecc_align(img, moved, init);
  CHECK(std::abs(res.transform.theta - truth.theta) * 180.0 / M_PI < 0.2);
  CHECK(std::abs(res.transform.tx - truth.tx) < 0.25);
  CHECK(std::abs(res.transform.ty - truth.ty) < 0.25);
}

TEST_CASE("ECC is invariant to affine intensity rescaling") {
  const auto img = speckle_scene(64, 7);
  EuclideanTransform truth = centered(64);
  truth.tx = 2.5;
  const auto moved = warp_image(img, truth);
  FluxImage bright = moved;
  for (auto& v : bright.values()) v = 40.0 * v + 7.0;
  const auto a = ecc_align(img, moved, centered(64));
  const auto b = ecc_align(img, bright, centered(64));
  CHECK_THAT(b.transform.tx, Catch::Matchers::WithinAbs(a.transform.tx, 1e-6));
  CHECK_THAT(b.transform.ty, Catch::Matchers::WithinAbs(a.transform.ty, 1e-6));
  CHECK_THAT(b.transform.theta, Catch::Matchers::WithinAbs(a.transform.theta, 1e-9));
  CHECK_THAT(b.ecc, Catch::Matchers::WithinAbs(a.ecc, 1e-9));
}

TEST_CASE("degenerate inputs") {
  SECTION("zero variance raises AlignmentError") {
    const FluxImage flat(32, 32, 5.0);
    const auto img = speckle_scene(32, 9);
    CHECK_THROWS_AS(ecc_align(flat, img, centered(32)), AlignmentError);
    CHECK_THROWS_AS(ecc_align(img, flat, centered(32)), AlignmentError);
  }
  SECTION("size mismatch raises InputError") {
    CHECK_THROWS_AS(ecc_align(speckle_scene(32, 1), speckle_scene(16, 1), centered(32)),
                    InputError);
  }
}
