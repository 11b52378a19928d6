#pragma once
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cpv/deblur.hpp"
#include "cpv/detect.hpp"
#include "cpv/ecc.hpp"
#include "cpv/errors.hpp"
#include "cpv/online.hpp"
#include "cpv/parallel.hpp"
#include "cpv/tensor.hpp"
#include "cpv/transform.hpp"
#include "cpv/video.hpp"

namespace cpv {

// ============================================================================
// End-to-end global-motion deblurring
// ============================================================================

enum class DetectorKind { kPelt, kBottomUp, kExhaustive, kOnline };

inline const char* detector_name(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kPelt: return "pelt";
    case DetectorKind::kBottomUp: return "bottomup";
    case DetectorKind::kExhaustive: return "exhaustive";
    case DetectorKind::kOnline: return "online";
  }
  return "?";
}

struct DeblurOptions {
  DetectorKind detector = DetectorKind::kBottomUp;
  double penalty = 5.0;            // BottomUp default; multi-object scenes use PELT with 6
  std::size_t bottomup_grid = 2;
  double switch_fraction = 0.01;
  int upsample_x = 1, upsample_y = 1;
  uint64_t upsample_seed = 0;
  int densify_radius = 1;          // online path only
  OnlineDetectorState online;      // online prior / hazard / look-behind
  EccOptions ecc;
  int refine_passes = 3;           // hierarchical refinement sweeps
  double min_align_photons = 20.0; // mean detections/pixel a node needs to be aligned
  unsigned threads = 0;
};

struct MotionPairRow {
  std::size_t pair = 0;            // CPV pair k -> k+1
  double theta = 0.0, tx = 0.0, ty = 0.0;
  double ecc = 0.0;
  bool converged = false;
};

struct DeblurReport {
  std::size_t cpv_frames = 0;
  std::vector<double> keyframe_times;
  std::vector<MotionPairRow> motion;          // per consecutive CPV pair
  std::vector<MergePairReport> merge_pairs;
  uint64_t photons_in = 0, photons_kept = 0, photons_discarded = 0;
};

struct DeblurResult {
  FluxImage image;                 // reference pose (scene at t = 0)
  MotionTrajectory trajectory;     // estimated cumulative motion
  DeblurReport report;
};

/// Detect per-pixel flux changepoints and return photon-frame boundary
/// lists, the common currency of the CPV builder.
inline std::vector<std::vector<uint32_t>> detect_boundaries(
    const PhotonFrameTensor& tensor, const std::vector<InterArrivalSeries>& series,
    const DeblurOptions& options) {
  const std::size_t n_px = tensor.n_pixels();
  std::vector<std::vector<uint32_t>> boundaries(n_px);
  parallel_for(
      n_px,
      [&](std::size_t px) {
        const auto& s = series[px];
        if (s.size() < 2) return;
        ChangepointSet cps;
        switch (options.detector) {
          case DetectorKind::kPelt:
            cps = detect_pelt(s, options.penalty);
            break;
          case DetectorKind::kBottomUp:
            cps = detect_bottomup(s, options.penalty, options.bottomup_grid);
            break;
          case DetectorKind::kExhaustive:
            cps = detect_exhaustive(s, options.penalty);
            break;
          case DetectorKind::kOnline:
            cps = detect_online_series(s, options.online);
            break;
        }
        boundaries[px] = boundary_frames(cps, s);
      },
      options.threads);
  if (options.detector == DetectorKind::kOnline && options.densify_radius > 0)
    boundaries =
        densify_changepoints(boundaries, tensor.width(), tensor.height(), options.densify_radius);
  return boundaries;
}

/// Estimate the cumulative scene trajectory from consecutive CPV frames;
/// each pair is initialized with the previous pair's motion. Consecutive
/// CPV frames are separated by a small pixel-turnover fraction, so any
/// per-pair estimate beyond a few degrees or a quarter frame of shift is
/// treated as an alignment failure and replaced by the coherence prior.
inline std::pair<std::vector<EuclideanTransform>, std::vector<MotionPairRow>> estimate_motion_chain(
    const std::vector<std::pair<double, FluxImage>>& cpv_frames, const EccOptions& ecc_options) {
  const int w = cpv_frames.front().second.width(), h = cpv_frames.front().second.height();
  const auto id = EuclideanTransform::identity((w - 1) / 2.0, (h - 1) / 2.0);
  const double max_theta = 6.0 * M_PI / 180.0;
  const double max_shift = 0.15 * std::min(w, h);
  std::vector<EuclideanTransform> cumulative{id};
  std::vector<MotionPairRow> rows;
  EuclideanTransform init = id;
  // align in the log domain; CPV levels are heavy-tailed
  std::vector<FluxImage> toned;
  toned.reserve(cpv_frames.size());
  for (const auto& [t, img] : cpv_frames) toned.push_back(log_tone_map(img));
  for (std::size_t k = 0; k + 1 < cpv_frames.size(); ++k) {
    MotionPairRow row;
    row.pair = k;
    EuclideanTransform step = init;  // fall back to temporal coherence
    try {
      const auto res = ecc_align_pyramid(toned[k], toned[k + 1], init, ecc_options);
      const auto& t = res.transform;
      if (res.ecc >= 0.5 && std::abs(t.theta) <= max_theta && std::abs(t.tx) <= max_shift &&
          std::abs(t.ty) <= max_shift) {
        step = t;
        row.ecc = res.ecc;
        row.converged = res.converged;
      } else {
        row.converged = false;
      }
    } catch (const AlignmentError&) {
      row.converged = false;
    }
    row.theta = step.theta;
    row.tx = step.tx;
    row.ty = step.ty;
    rows.push_back(row);
    cumulative.push_back(compose(step, cumulative.back()));
    init = step;
  }
  return {std::move(cumulative), std::move(rows)};
}

namespace detail {

/// One node of the merge hierarchy: a contiguous frame range plus the
/// keyframe span whose poses it owns. The node's grid pose is always the
/// live keyframe pose at key_begin, so pose corrections propagate.
struct MergeNode {
  std::size_t frame_begin = 0, frame_end = 0;
  std::size_t key_begin = 0, key_end = 0;
  FluxImage image;
};

}  // namespace detail

/// Hierarchical motion refinement with photon re-integration. Starting from
/// one deblurred frame per CPV interval, consecutive pairs are ECC-aligned;
/// each alignment rigidly corrects the right node's keyframe poses, and the
/// merged node's image is re-accumulated from the raw photon tensor along
/// the corrected trajectory. Halving the frame count per level progressively
/// pools photons along ever longer spans without compounding resampling or
/// averaging noisy flux ratios; the final single node is the full-exposure
/// integration along the refined trajectory.
template <class Tensor, class Accumulate>
FluxImage refine_and_integrate(const Tensor& tensor, std::vector<EuclideanTransform>& keyframes,
                               const std::vector<double>& keyframe_times,
                               const std::vector<std::size_t>& interval_frames,  // size = keys + 1
                               Accumulate&& accumulate, const EccOptions& ecc_options,
                               std::vector<MergePairReport>* reports, int passes = 3,
                               double photons_per_frame_px = 1.0, double min_align_photons = 0.0) {
  const double max_dev_theta = 8.0 * M_PI / 180.0;
  const double max_dev_shift = 0.15 * std::min(tensor.width(), tensor.height());

  auto trajectory = [&] { return interpolate_trajectory(keyframes, keyframe_times); };

  FluxImage final_image;
  for (int pass = 0; pass < std::max(1, passes); ++pass) {
    std::vector<detail::MergeNode> nodes;
    for (std::size_t k = 0; k + 1 < interval_frames.size(); ++k) {
      if (interval_frames[k + 1] <= interval_frames[k]) continue;
      detail::MergeNode node;
      node.frame_begin = interval_frames[k];
      node.frame_end = interval_frames[k + 1];
      node.key_begin = k;
      node.key_end = k + 1;
      nodes.push_back(std::move(node));
    }
    if (nodes.empty()) throw InputError("refine_and_integrate: no frames");
    {
      const auto traj = trajectory();
      for (auto& node : nodes)
        node.image = accumulate(traj, node.frame_begin, node.frame_end, keyframes[node.key_begin]);
    }

    int level = 0;
    bool any_correction = false;
    while (nodes.size() > 1) {
      std::vector<detail::MergeNode> next;
      for (std::size_t i = 0; i + 1 < nodes.size(); i += 2) {
        auto& a = nodes[i];
        auto& b = nodes[i + 1];
        MergePairReport report;
        report.level = level;
        report.left = i;
        report.right = i + 1;
        const EuclideanTransform pose_a = keyframes[a.key_begin];
        const EuclideanTransform pose_b = keyframes[b.key_begin];
        const EuclideanTransform init = compose(pose_a, pose_b.inverse());
        EuclideanTransform content_map = init;
        // photon-starved nodes produce junk alignments; leave their relative
        // pose to the chain estimate until pooling has cleaned them up
        const double budget =
            photons_per_frame_px *
            static_cast<double>(std::min(a.frame_end - a.frame_begin, b.frame_end - b.frame_begin));
        if (budget >= min_align_photons) {
          try {
            const auto res =
                ecc_align_pyramid(log_tone_map(b.image), log_tone_map(a.image), init, ecc_options);
            const auto& t = res.transform;
            if (std::abs(t.theta - init.theta) <= max_dev_theta &&
                std::abs(t.tx - init.tx) <= max_dev_shift &&
                std::abs(t.ty - init.ty) <= max_dev_shift) {
              content_map = t;
              report.ecc = res.ecc;
              report.converged = res.converged;
            }
          } catch (const AlignmentError&) {
            report.fell_back = true;
          }
        }
        // rigid pose correction for the right node's keyframes
        const EuclideanTransform fix = compose(content_map.inverse(), init);
        if (!fix.is_identity(1e-12)) {
          any_correction = true;
          for (std::size_t j = b.key_begin; j < b.key_end && j < keyframes.size(); ++j)
            keyframes[j] = compose(fix, keyframes[j]);
        }

        detail::MergeNode merged;
        merged.frame_begin = a.frame_begin;
        merged.frame_end = b.frame_end;
        merged.key_begin = a.key_begin;
        merged.key_end = b.key_end;
        next.push_back(std::move(merged));
        if (reports) reports->push_back(report);
      }
      if (nodes.size() % 2 == 1) next.push_back(std::move(nodes.back()));
      const auto traj = trajectory();
      for (auto& node : next)
        if (node.image.empty() || node.key_end - node.key_begin > 1)
          node.image =
              accumulate(traj, node.frame_begin, node.frame_end, keyframes[node.key_begin]);
      nodes.swap(next);
      ++level;
    }
    final_image = std::move(nodes.front().image);
    if (!any_correction) break;  // converged; further passes change nothing
  }
  return final_image;
}

/// The full pipeline: changepoint detection -> changepoint video ->
/// adaptive sampling -> pairwise ECC motion -> hierarchical refinement with
/// photon re-integration -> one image at the t = 0 pose. With no detected
/// motion cues this degrades to the long-exposure image.
inline DeblurResult deblur_pipeline(const PhotonFrameTensor& tensor,
                                    const DeblurOptions& options = {}) {
  const auto series = build_interarrival_all(tensor, options.threads);
  const auto boundaries = detect_boundaries(tensor, series, options);
  const auto video = build_cpv_frames(tensor, boundaries, options.threads);
  auto cpv_frames = sample_cpv(video, options.switch_fraction);

  DeblurResult result;
  result.report.cpv_frames = cpv_frames.size();

  // optional zero-order-hold upsampling of both the CPV and the tensor
  const bool upsampled = options.upsample_x > 1 || options.upsample_y > 1;
  PhotonFrameTensor tensor_up;
  const PhotonFrameTensor& work_tensor = upsampled
      ? (tensor_up = upsample_zoh(tensor, options.upsample_x, options.upsample_y,
                                  options.upsample_seed, options.threads))
      : tensor;
  if (upsampled)
    for (auto& [t, img] : cpv_frames)
      img = upsample_zoh(img, options.upsample_x, options.upsample_y);

  auto [cumulative, motion_rows] = estimate_motion_chain(cpv_frames, options.ecc);
  result.report.motion = std::move(motion_rows);

  std::vector<double> keyframe_times;
  keyframe_times.reserve(cpv_frames.size());
  for (const auto& [t, img] : cpv_frames) keyframe_times.push_back(t);
  result.report.keyframe_times = keyframe_times;

  // CPV interval edges in photon frames
  const double t_pf = tensor.config().frame_period();
  std::vector<std::size_t> interval_frames;
  for (double t : keyframe_times)
    interval_frames.push_back(static_cast<std::size_t>(std::llround(t / t_pf)));
  interval_frames.push_back(tensor.n_frames());

  result.image = refine_and_integrate(
      work_tensor, cumulative, keyframe_times, interval_frames,
      [&](const MotionTrajectory& traj, std::size_t f0, std::size_t f1,
          const EuclideanTransform& pose) {
        auto acc = warp_accumulate(work_tensor, traj, f0, f1, pose, options.threads);
        if (f0 == 0 && f1 == work_tensor.n_frames()) {
          result.report.photons_in = acc.photons_in;
          result.report.photons_kept = acc.photons_kept;
          result.report.photons_discarded = acc.photons_discarded;
        }
        return std::move(acc.flux);
      },
      options.ecc, &result.report.merge_pairs, options.refine_passes,
      static_cast<double>(work_tensor.total_detections()) /
          (static_cast<double>(work_tensor.n_frames()) * work_tensor.n_pixels()),
      options.min_align_photons);
  result.trajectory = interpolate_trajectory(cumulative, keyframe_times);
  return result;
}

/// Binary-data pipeline: detection on the per-pixel count sequences with
/// the Bernoulli cost, QIS MLE everywhere flux is assembled.
inline DeblurResult deblur_pipeline_qis(const QisFrameTensor& tensor,
                                        const DeblurOptions& options = {}) {
  const std::size_t n_px = tensor.n_pixels();
  std::vector<std::vector<uint32_t>> boundaries(n_px);
  parallel_for(
      n_px,
      [&](std::size_t px) {
        const int row = static_cast<int>(px) / tensor.width();
        const int col = static_cast<int>(px) % tensor.width();
        const auto counts = tensor.pixel_counts(row, col);
        if (counts.size() < 2) return;
        // for binary frames, measurement index == frame index
        ChangepointSet cps;
        switch (options.detector) {
          case DetectorKind::kPelt:
            cps = detect_pelt_qis(counts, options.penalty);
            break;
          case DetectorKind::kBottomUp:
            cps = detect_bottomup_qis(counts, options.penalty, options.bottomup_grid);
            break;
          case DetectorKind::kExhaustive:
            cps = detect_exhaustive_qis(counts, options.penalty);
            break;
          case DetectorKind::kOnline:
            throw InputError("deblur_pipeline_qis: online detection expects timestamp data");
        }
        auto& b = boundaries[px];
        for (std::size_t idx : cps.interior()) b.push_back(static_cast<uint32_t>(idx));
      },
      options.threads);

  const auto video = build_cpv_qis(tensor, boundaries, options.threads);
  auto cpv_frames = sample_cpv(video, options.switch_fraction);

  DeblurResult result;
  result.report.cpv_frames = cpv_frames.size();
  auto [cumulative, motion_rows] = estimate_motion_chain(cpv_frames, options.ecc);
  result.report.motion = std::move(motion_rows);

  std::vector<double> keyframe_times;
  for (const auto& [t, img] : cpv_frames) keyframe_times.push_back(t);
  result.report.keyframe_times = keyframe_times;

  const double t_pf = tensor.config().frame_period();
  std::vector<std::size_t> interval_frames;
  for (double t : keyframe_times)
    interval_frames.push_back(static_cast<std::size_t>(std::llround(t / t_pf)));
  interval_frames.push_back(tensor.n_frames());

  result.image = refine_and_integrate(
      tensor, cumulative, keyframe_times, interval_frames,
      [&](const MotionTrajectory& traj, std::size_t f0, std::size_t f1,
          const EuclideanTransform& pose) {
        auto acc = warp_accumulate_qis(tensor, traj, f0, f1, pose, options.threads);
        if (f0 == 0 && f1 == tensor.n_frames()) {
          result.report.photons_in = acc.photons_in;
          result.report.photons_kept = acc.photons_kept;
          result.report.photons_discarded = acc.photons_discarded;
        }
        return std::move(acc.flux);
      },
      options.ecc, &result.report.merge_pairs, options.refine_passes,
      [&] {
        uint64_t ones = 0;
        for (uint8_t v : tensor.raw()) ones += v;
        return static_cast<double>(ones) /
               (static_cast<double>(tensor.n_frames()) * tensor.n_pixels());
      }(),
      options.min_align_photons);
  result.trajectory = interpolate_trajectory(cumulative, keyframe_times);
  return result;
}

}  // namespace cpv
