#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cpv/deblur.hpp"
#include "cpv/metrics.hpp"
#include "cpv/pipeline.hpp"
#include "cpv/scenes.hpp"
#include "cpv/simulate.hpp"

using namespace cpv;

namespace {

const SensorConfig kConfig{8000, 256e-12, 1.0};

MotionTrajectory identity_trajectory(const PhotonFrameTensor& t) {
  const auto id = EuclideanTransform::identity((t.width() - 1) / 2.0, (t.height() - 1) / 2.0);
  MotionTrajectory traj;
  traj.keyframe_times = {0.0};
  traj.keyframes = {id};
  return traj;
}

}  // namespace

TEST_CASE("warp_accumulate with the identity equals the fixed-window baseline bit for bit") {
  const auto scene = scale_to_flux(speckle_scene(24, 4), 1e4, 1e6);
  const auto tensor = sample_photon_frames({scene}, 300, kConfig, 7);
  const auto acc = warp_accumulate(tensor, identity_trajectory(tensor), 0, tensor.n_frames());
  const auto baseline = fixed_window_baseline(tensor, tensor.n_frames());
  REQUIRE(baseline.size() == 1);
  for (std::size_t i = 0; i < acc.flux.size(); ++i) CHECK(acc.flux[i] == baseline[0][i]);
  CHECK(acc.photons_discarded == 0);
  CHECK(acc.photons_in == tensor.total_detections());
}

TEST_CASE("warp_accumulate conserves photons under rotation") {
  const auto scene = scale_to_flux(orange_scene(32, 2), 1e4, 1e6);
  const auto tensor = sample_photon_frames({scene}, 200, kConfig, 9);
  const auto id = EuclideanTransform::identity(15.5, 15.5);
  EuclideanTransform quarter = id;
  quarter.theta = 0.3;
  quarter.tx = 2.0;
  const auto traj = interpolate_trajectory({id, quarter}, {0.0, 200.0 * kConfig.frame_period()});
  const auto acc = warp_accumulate(tensor, traj, 0, tensor.n_frames());
  CHECK(acc.photons_in == tensor.total_detections());
  CHECK(acc.photons_kept + acc.photons_discarded == acc.photons_in);
  // rotation + small shift keeps most content inside
  CHECK(acc.photons_kept > acc.photons_in * 9 / 10);
  // tally kept photons across the grid equals the reported kept count
  const auto single = fixed_window_baseline(tensor, tensor.n_frames());
  (void)single;
}

TEST_CASE("single-frame range gives that frame's instantaneous estimate") {
  const auto scene = scale_to_flux(speckle_scene(16, 5), 1e5, 1e6);
  const auto tensor = sample_photon_frames({scene}, 10, kConfig, 3);
  const auto acc = warp_accumulate(tensor, identity_trajectory(tensor), 4, 5);
  const auto baseline = fixed_window_baseline(tensor, 1);
  for (std::size_t i = 0; i < acc.flux.size(); ++i) CHECK(acc.flux[i] == baseline[4][i]);
}

TEST_CASE("fixed_window_baseline window splits") {
  const auto scene = scale_to_flux(speckle_scene(8, 6), 1e5, 5e5);
  const auto tensor = sample_photon_frames({scene}, 100, kConfig, 5);
  SECTION("window equal to the capture gives one image") {
    CHECK(fixed_window_baseline(tensor, 100).size() == 1);
  }
  SECTION("window of one frame gives a per-frame video") {
    CHECK(fixed_window_baseline(tensor, 1).size() == 100);
  }
  SECTION("trailing partial window kept") {
    CHECK(fixed_window_baseline(tensor, 30).size() == 4);
  }
}

TEST_CASE("upsample_zoh") {
  SECTION("factors (1,1) are the identity") {
    const auto scene = scale_to_flux(speckle_scene(8, 1), 1e5, 1e6);
    const auto tensor = sample_photon_frames({scene}, 20, kConfig, 1);
    const auto up = upsample_zoh(tensor, 1, 1, 0);
    CHECK(up.raw() == tensor.raw());
  }
  SECTION("flux image replication") {
    FluxImage img(2, 2);
    img.at(0, 0) = 1.0;
    img.at(0, 1) = 2.0;
    img.at(1, 0) = 3.0;
    img.at(1, 1) = 4.0;
    const auto up = upsample_zoh(img, 2, 2);
    REQUIRE(up.width() == 4);
    REQUIRE(up.height() == 4);
    CHECK(up.at(0, 0) == 1.0);
    CHECK(up.at(1, 1) == 1.0);
    CHECK(up.at(0, 2) == 2.0);
    CHECK(up.at(3, 3) == 4.0);
  }
  SECTION("tensor detection count is conserved and spread within blocks") {
    const auto scene = scale_to_flux(speckle_scene(12, 2), 1e5, 1e6);
    const auto tensor = sample_photon_frames({scene}, 50, kConfig, 11);
    const auto up = upsample_zoh(tensor, 3, 2, 77);
    CHECK(up.width() == 36);
    CHECK(up.height() == 24);
    CHECK(up.total_detections() == tensor.total_detections());
    // each original detection occupies exactly one cell of its block
    for (std::size_t f = 0; f < tensor.n_frames(); ++f)
      for (int r = 0; r < tensor.height(); ++r)
        for (int c = 0; c < tensor.width(); ++c) {
          int hits = 0;
          for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 3; ++dc)
              hits += up.detected(f, r * 2 + dr, c * 3 + dc);
          CHECK(hits == (tensor.detected(f, r, c) ? 1 : 0));
        }
  }
}

TEST_CASE("hierarchical_merge") {
  const auto img = scale_to_flux(speckle_scene(32, 7), 1e4, 1e6);
  SECTION("one frame returns itself") {
    const auto res = hierarchical_merge({img}, {1.0});
    CHECK(res.image.values() == img.values());
    CHECK(res.pairs.empty());
  }
  SECTION("identical frames merge to the same image") {
    const auto res = hierarchical_merge({img, img, img, img}, {1.0, 1.0, 1.0, 1.0});
    REQUIRE(res.pairs.size() == 3);
    for (std::size_t i = 0; i < img.size(); ++i)
      CHECK_THAT(res.image[i], Catch::Matchers::WithinRel(img[i], 1e-6));
  }
  SECTION("duration weighting slants toward the longer frame") {
    FluxImage a(16, 16, 10.0), b(16, 16, 20.0);
    a.at(3, 3) = 11.0;  // break zero variance
    b.at(3, 3) = 21.0;
    const auto res = hierarchical_merge({a, b}, {3.0, 1.0});
    CHECK_THAT(res.image.at(8, 8), Catch::Matchers::WithinRel(12.5, 1e-9));
  }
}

TEST_CASE("end-to-end pipeline on a small rotating scene beats the long exposure") {
  // 64x64 disc, 40 steps x 10 frames at 0.25 deg/step = 10 degrees total
  const auto gt = scale_to_flux(orange_scene(64, 3), 1e4, 1e6);
  MotionScript script;
  script.kind = MotionKind::kRotation;
  script.step_degrees = 0.25;
  script.total_steps = 40;
  script.photons_per_step = 10;
  script.rng_seed = 5;
  const auto seq = render_flux_sequence(gt, script);
  const auto tensor = sample_photon_frames(seq, script.photons_per_step, kConfig, 5);

  DeblurOptions options;
  options.detector = DetectorKind::kBottomUp;
  options.penalty = 5.0;
  const auto result = deblur_pipeline(tensor, options);
  REQUIRE(result.report.cpv_frames >= 2);

  const auto long_exposure = fixed_window_baseline(tensor, tensor.n_frames())[0];
  const double snr_ours = snr_db(result.image, gt);
  const double snr_long = snr_db(long_exposure, gt);
  INFO("ours " << snr_ours << " dB, long exposure " << snr_long << " dB, cpv frames "
               << result.report.cpv_frames);
  CHECK(snr_ours > snr_long);
  CHECK(result.report.photons_in == tensor.total_detections());
}

TEST_CASE("pipeline degrades to the long exposure when nothing moves") {
  const auto gt = scale_to_flux(speckle_scene(24, 9), 1e5, 1e6);
  const auto tensor = sample_photon_frames({gt}, 400, kConfig, 13);
  DeblurOptions options;
  options.penalty = 6.0;
  const auto result = deblur_pipeline(tensor, options);
  const auto long_exposure = fixed_window_baseline(tensor, tensor.n_frames())[0];
  CHECK(result.report.cpv_frames == 1);
  for (std::size_t i = 0; i < result.image.size(); ++i)
    CHECK(result.image[i] == long_exposure[i]);
}
