#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "cpv/detect.hpp"
#include "cpv/ecc.hpp"
#include "cpv/errors.hpp"
#include "cpv/flux.hpp"
#include "cpv/image.hpp"
#include "cpv/online.hpp"
#include "cpv/parallel.hpp"
#include "cpv/rng.hpp"
#include "cpv/tensor.hpp"
#include "cpv/transform.hpp"
#include "cpv/video.hpp"
#include "cpv/warp.hpp"

namespace cpv {

// ============================================================================
// Photon accumulation along trajectories
// ============================================================================

struct AccumulateResult {
  FluxImage flux;
  std::vector<uint8_t> covered;   // pixels that received any exposure
  uint64_t photons_in = 0;        // detections in the frame range
  uint64_t photons_kept = 0;      // landed inside the reference grid
  uint64_t photons_discarded = 0; // warped out of bounds

  bool coverage_at(int row, int col) const {
    return covered[static_cast<std::size_t>(row) * flux.width() + col] != 0;
  }
};

namespace detail {

struct AccumGrid {
  std::vector<uint64_t> detections, duration_units, frames;
  explicit AccumGrid(std::size_t n) : detections(n, 0), duration_units(n, 0), frames(n, 0) {}
  void add(const AccumGrid& o) {
    for (std::size_t i = 0; i < detections.size(); ++i) {
      detections[i] += o.detections[i];
      duration_units[i] += o.duration_units[i];
      frames[i] += o.frames[i];
    }
  }
};

/// Accumulate integer (detection, duration) tallies from each frame into
/// the reference grid through the trajectory. PerFrame extracts
/// (count, duration_units) for one tensor entry. Runs frame-chunks in
/// parallel; integer tallies make the reduction order irrelevant.
template <class Tensor, class PerFrame>
AccumGrid accumulate_tensor(const Tensor& tensor, const MotionTrajectory& trajectory,
                            const EuclideanTransform& reference_pose, std::size_t frame_begin,
                            std::size_t frame_end, PerFrame&& per_frame, uint64_t* photons_in,
                            uint64_t* discarded, unsigned threads) {
  const int w = tensor.width(), h = tensor.height();
  const std::size_t n_px = tensor.n_pixels();
  const double t_pf = tensor.config().frame_period();

  AccumGrid total(n_px);
  uint64_t total_in = 0, total_discarded = 0;
  std::mutex merge_mutex;
  parallel_chunks(
      frame_end - frame_begin,
      [&](std::size_t chunk_begin, std::size_t chunk_end) {
        AccumGrid local(n_px);
        uint64_t in = 0, lost = 0;
        for (std::size_t k = chunk_begin; k < chunk_end; ++k) {
          const std::size_t f = frame_begin + k;
          // frame coords -> scene reference coords -> reference grid
          const double t = (static_cast<double>(f) + 0.5) * t_pf;
          const EuclideanTransform to_ref =
              compose(reference_pose, trajectory.at_time(t).inverse());
          const auto m = to_ref.matrix();
          for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
              const auto [count, units] = per_frame(f, r, c);
              in += count;
              const double x = m[0] * c + m[1] * r + m[2];
              const double y = m[3] * c + m[4] * r + m[5];
              const auto tc = static_cast<long>(std::lround(x));
              const auto tr = static_cast<long>(std::lround(y));
              if (tc < 0 || tc >= w || tr < 0 || tr >= h) {
                lost += count;
                continue;
              }
              const std::size_t i = static_cast<std::size_t>(tr) * w + tc;
              local.detections[i] += count;
              local.duration_units[i] += units;
              local.frames[i] += 1;
            }
        }
        std::lock_guard<std::mutex> lock(merge_mutex);
        total.add(local);
        total_in += in;
        total_discarded += lost;
      },
      threads);
  if (photons_in) *photons_in = total_in;
  if (discarded) *discarded = total_discarded;
  return total;
}

}  // namespace detail

/// Integrate photon frames [frame_begin, frame_end) along the trajectory
/// into the grid of `reference_pose` (default: the trajectory's reference
/// frame). Every detection (weight 1, duration = its timestamp) and
/// non-detection (duration = the frame period) lands on the nearest
/// reference pixel; per-pixel flux is detections / (q * time). Pixels that
/// never receive exposure are flagged uncovered and left at zero.
inline AccumulateResult warp_accumulate(
    const PhotonFrameTensor& tensor, const MotionTrajectory& trajectory, std::size_t frame_begin,
    std::size_t frame_end,
    std::optional<EuclideanTransform> reference_pose = std::nullopt, unsigned threads = 0) {
  if (frame_end > tensor.n_frames() || frame_begin >= frame_end)
    throw InputError("warp_accumulate: bad frame range");
  const EuclideanTransform ref =
      reference_pose ? *reference_pose
                     : EuclideanTransform::identity((tensor.width() - 1) / 2.0,
                                                    (tensor.height() - 1) / 2.0);
  const uint16_t sentinel = tensor.sentinel();
  AccumulateResult out;
  out.flux = FluxImage(tensor.width(), tensor.height());
  const auto grid = detail::accumulate_tensor(
      tensor, trajectory, ref, frame_begin, frame_end,
      [&](std::size_t f, int r, int c) -> std::pair<uint64_t, uint64_t> {
        const uint16_t b = tensor.bin(f, r, c);
        return {b != sentinel ? 1u : 0u, b};
      },
      &out.photons_in, &out.photons_discarded, threads);
  out.photons_kept = out.photons_in - out.photons_discarded;
  out.covered.resize(tensor.n_pixels());
  for (std::size_t i = 0; i < tensor.n_pixels(); ++i) {
    out.covered[i] = grid.duration_units[i] > 0 || grid.frames[i] > 0;
    if (grid.detections[i] == 0) continue;
    if (grid.duration_units[i] == 0) {
      // all detections in bin 0: half-bin convention keeps the value finite
      out.flux[i] = 2.0 / (tensor.config().detection_efficiency * tensor.config().bin_width);
      continue;
    }
    out.flux[i] = flux_from_counts(grid.detections[i], grid.duration_units[i], tensor.config());
  }
  return out;
}

/// Binary-data variant: per-pixel flux from the QIS MLE over accumulated
/// (detections, frames), saturation capped.
inline AccumulateResult warp_accumulate_qis(
    const QisFrameTensor& tensor, const MotionTrajectory& trajectory, std::size_t frame_begin,
    std::size_t frame_end,
    std::optional<EuclideanTransform> reference_pose = std::nullopt, unsigned threads = 0) {
  if (frame_end > tensor.n_frames() || frame_begin >= frame_end)
    throw InputError("warp_accumulate_qis: bad frame range");
  const EuclideanTransform ref =
      reference_pose ? *reference_pose
                     : EuclideanTransform::identity((tensor.width() - 1) / 2.0,
                                                    (tensor.height() - 1) / 2.0);
  AccumulateResult out;
  out.flux = FluxImage(tensor.width(), tensor.height());
  const auto grid = detail::accumulate_tensor(
      tensor, trajectory, ref, frame_begin, frame_end,
      [&](std::size_t f, int r, int c) -> std::pair<uint64_t, uint64_t> {
        const uint8_t n = tensor.count(f, r, c);
        return {n, 1u};
      },
      &out.photons_in, &out.photons_discarded, threads);
  out.photons_kept = out.photons_in - out.photons_discarded;
  out.covered.resize(tensor.n_pixels());
  for (std::size_t i = 0; i < tensor.n_pixels(); ++i) {
    out.covered[i] = grid.frames[i] > 0;
    if (grid.frames[i] == 0) continue;
    out.flux[i] = flux_from_binary_counts_capped(grid.detections[i], grid.frames[i],
                                                 tensor.config());
  }
  return out;
}

// ============================================================================
// Fixed-window baseline
// ============================================================================

/// Conventional reconstruction: non-overlapping windows of window_frames,
/// timestamp MLE per pixel per window. The trailing partial window is kept.
inline std::vector<FluxImage> fixed_window_baseline(const PhotonFrameTensor& tensor,
                                                    std::size_t window_frames,
                                                    unsigned threads = 0) {
  if (window_frames < 1) throw InputError("fixed_window_baseline: window must be >= 1");
  const std::size_t n_windows = (tensor.n_frames() + window_frames - 1) / window_frames;
  std::vector<FluxImage> out(n_windows);
  const uint16_t sentinel = tensor.sentinel();
  for (std::size_t wdx = 0; wdx < n_windows; ++wdx) {
    const std::size_t f0 = wdx * window_frames;
    const std::size_t f1 = std::min(tensor.n_frames(), f0 + window_frames);
    FluxImage img(tensor.width(), tensor.height());
    parallel_for(
        tensor.n_pixels(),
        [&](std::size_t px) {
          uint64_t detections = 0, bins = 0;
          for (std::size_t f = f0; f < f1; ++f) {
            const uint16_t b = tensor.frame(f)[px];
            bins += b;
            detections += (b != sentinel);
          }
          if (detections > 0 && bins == 0)
            img[px] = 2.0 / (tensor.config().detection_efficiency * tensor.config().bin_width);
          else
            img[px] = flux_from_counts(detections, bins, tensor.config());
        },
        threads);
    out[wdx] = std::move(img);
  }
  return out;
}

inline std::vector<FluxImage> fixed_window_baseline_qis(const QisFrameTensor& tensor,
                                                        std::size_t window_frames,
                                                        unsigned threads = 0) {
  if (window_frames < 1) throw InputError("fixed_window_baseline: window must be >= 1");
  const std::size_t n_windows = (tensor.n_frames() + window_frames - 1) / window_frames;
  std::vector<FluxImage> out(n_windows);
  for (std::size_t wdx = 0; wdx < n_windows; ++wdx) {
    const std::size_t f0 = wdx * window_frames;
    const std::size_t f1 = std::min(tensor.n_frames(), f0 + window_frames);
    FluxImage img(tensor.width(), tensor.height());
    parallel_for(
        tensor.n_pixels(),
        [&](std::size_t px) {
          uint64_t ones = 0;
          for (std::size_t f = f0; f < f1; ++f) ones += tensor.frame(f)[px];
          img[px] = flux_from_binary_counts_capped(ones, f1 - f0, tensor.config());
        },
        threads);
    out[wdx] = std::move(img);
  }
  return out;
}

// ============================================================================
// Zero-order-hold upsampling
// ============================================================================

/// Enlarge a photon tensor by pixel replication in space; each original
/// detection is assigned to exactly one cell of its factor_x * factor_y
/// block, chosen by the seeded per-pixel stream, so photon counts are
/// conserved while photons from one pixel can land in a larger area during
/// motion integration. Non-detections replicate as non-detections.
inline PhotonFrameTensor upsample_zoh(const PhotonFrameTensor& tensor, int factor_x, int factor_y,
                                      uint64_t rng_seed = 0, unsigned threads = 0) {
  if (factor_x < 1 || factor_y < 1) throw InputError("upsample_zoh: factors must be >= 1");
  if (factor_x == 1 && factor_y == 1) return tensor;
  const int w = tensor.width(), h = tensor.height();
  PhotonFrameTensor out(w * factor_x, h * factor_y, tensor.n_frames(), tensor.config());
  const uint16_t sentinel = tensor.sentinel();
  const auto cells = static_cast<uint32_t>(factor_x) * static_cast<uint32_t>(factor_y);
  parallel_for(
      tensor.n_pixels(),
      [&](std::size_t px) {
        const int r = static_cast<int>(px) / w, c = static_cast<int>(px) % w;
        Pcg32 rng(rng_seed ^ 0x2b0eULL, px);
        for (std::size_t f = 0; f < tensor.n_frames(); ++f) {
          const uint16_t b = tensor.frame(f)[px];
          if (b == sentinel) {
            rng.advance(1);
            continue;
          }
          const uint32_t cell = rng.next_bucket(cells);
          const int dr = static_cast<int>(cell) / factor_x;
          const int dc = static_cast<int>(cell) % factor_x;
          out.set_bin(f, r * factor_y + dr, c * factor_x + dc, b);
        }
      },
      threads);
  return out;
}

/// Image variant: plain pixel replication.
inline FluxImage upsample_zoh(const FluxImage& img, int factor_x, int factor_y) {
  return upsample_replicate(img, factor_x, factor_y);
}

// ============================================================================
// Hierarchical merge
// ============================================================================

struct MergePairReport {
  int level = 0;
  std::size_t left = 0, right = 0;
  double ecc = 0.0;
  bool converged = false;
  bool fell_back = false;  // alignment failed; pair averaged unaligned
};

struct MergeResult {
  FluxImage image;
  double duration = 0.0;
  std::vector<MergePairReport> pairs;
};

/// Merge a deblurred frame sequence to one image: align consecutive pairs,
/// warp the later frame onto the earlier, duration-weight the average, and
/// repeat with half the frames per level until one remains. Optional
/// per-frame poses (scene motion at each frame, shared rotation center)
/// initialize the pair alignments; an alignment failure falls back to the
/// unaligned average of that pair and is flagged in the report.
inline MergeResult hierarchical_merge(std::vector<FluxImage> frames, std::vector<double> durations,
                                      std::vector<EuclideanTransform> poses = {},
                                      const EccOptions& options = {}) {
  if (frames.empty()) throw InputError("hierarchical_merge: no frames");
  if (durations.size() != frames.size())
    throw InputError("hierarchical_merge: durations size mismatch");
  for (double d : durations)
    if (!(d > 0.0)) throw InputError("hierarchical_merge: durations must be > 0");
  const double cx = (frames.front().width() - 1) / 2.0;
  const double cy = (frames.front().height() - 1) / 2.0;
  if (poses.empty())
    poses.assign(frames.size(), EuclideanTransform::identity(cx, cy));
  if (poses.size() != frames.size()) throw InputError("hierarchical_merge: poses size mismatch");

  MergeResult result;
  int level = 0;
  while (frames.size() > 1) {
    std::vector<FluxImage> next;
    std::vector<double> next_durations;
    std::vector<EuclideanTransform> next_poses;
    for (std::size_t i = 0; i + 1 < frames.size(); i += 2) {
      const FluxImage& a = frames[i];
      const FluxImage& b = frames[i + 1];
      MergePairReport report;
      report.level = level;
      report.left = i;
      report.right = i + 1;
      // known poses seed the init with the motion b -> a
      const EuclideanTransform init =
          compose(with_center(poses[i], cx, cy), with_center(poses[i + 1], cx, cy).inverse());
      const double da = durations[i], db = durations[i + 1];
      FluxImage merged(a.width(), a.height());
      bool aligned = false;
      EuclideanTransform b_to_a = init;
      try {
        // registration on tone-mapped copies; averaging stays in linear flux
        const auto ecc = ecc_align_pyramid(log_tone_map(b), log_tone_map(a), init, options);
        report.ecc = ecc.ecc;
        report.converged = ecc.converged;
        b_to_a = ecc.transform;
        aligned = true;
      } catch (const AlignmentError&) {
        report.fell_back = true;
      }
      if (aligned) {
        // warped sample of b with validity: uncovered pixels keep a alone
        const auto m = b_to_a.inverse().matrix();
        for (int r = 0; r < merged.height(); ++r)
          for (int c = 0; c < merged.width(); ++c) {
            const double sx = m[0] * c + m[1] * r + m[2];
            const double sy = m[3] * c + m[4] * r + m[5];
            bool inside = false;
            const double v = bilinear_sample(b, sx, sy, 0.0, &inside);
            const std::size_t p = static_cast<std::size_t>(r) * merged.width() + c;
            merged[p] = inside ? (da * a[p] + db * v) / (da + db) : a[p];
          }
      } else {
        for (std::size_t p = 0; p < merged.size(); ++p)
          merged[p] = (da * a[p] + db * b[p]) / (da + db);
      }
      next.push_back(std::move(merged));
      next_durations.push_back(da + db);
      next_poses.push_back(poses[i]);
      result.pairs.push_back(report);
    }
    if (frames.size() % 2 == 1) {
      next.push_back(std::move(frames.back()));
      next_durations.push_back(durations.back());
      next_poses.push_back(poses.back());
    }
    frames.swap(next);
    durations.swap(next_durations);
    poses.swap(next_poses);
    ++level;
  }
  result.image = std::move(frames.front());
  result.duration = durations.front();
  return result;
}

}  // namespace cpv
