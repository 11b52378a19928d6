#pragma once
#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "cpv/detect.hpp"
#include "cpv/errors.hpp"
#include "cpv/flux.hpp"
#include "cpv/image.hpp"
#include "cpv/parallel.hpp"
#include "cpv/tensor.hpp"

namespace cpv {

// ============================================================================
// Per-pixel piecewise-constant flux profiles
// ============================================================================

/// Right-continuous step function over [0, T]: levels[k] holds on
/// [breakpoints[k], breakpoints[k+1]). A static pixel has exactly one level.
struct PixelFluxProfile {
  std::vector<double> breakpoints;  // seconds; first = 0, last = T
  std::vector<double> levels;       // photons/second, one per segment

  double value_at(double t) const {
    if (levels.empty()) return 0.0;
    // right-continuous: at a breakpoint the new level applies
    std::size_t k = 1;
    while (k + 1 < breakpoints.size() && breakpoints[k] <= t) ++k;
    return levels[k - 1];
  }
  std::size_t segment_count() const { return levels.size(); }
};

/// The changepoint video: every pixel's piecewise-constant flux profile
/// over the common exposure [0, total_exposure].
struct ChangepointVideo {
  int width = 0, height = 0;
  double total_exposure = 0.0;
  std::vector<PixelFluxProfile> profiles;  // row-major

  const PixelFluxProfile& profile(int row, int col) const {
    return profiles[static_cast<std::size_t>(row) * width + col];
  }

  /// Evaluate every pixel at time t.
  FluxImage frame_at(double t) const {
    FluxImage img(width, height);
    for (std::size_t i = 0; i < profiles.size(); ++i) img[i] = profiles[i].value_at(t);
    return img;
  }
};

namespace detail {

/// Shared level builder: per-pixel frame boundaries -> per-segment flux via
/// the tensor sweep. FluxFn turns (detections, duration_bins or frames) into
/// a level.
template <class Tensor, class LevelFn>
ChangepointVideo build_profiles(const Tensor& tensor,
                                const std::vector<std::vector<uint32_t>>& frame_boundaries,
                                LevelFn&& level_of, unsigned threads) {
  const std::size_t n_px = tensor.n_pixels();
  if (frame_boundaries.size() != n_px)
    throw InputError("build_cpv: per-pixel boundary count mismatch");
  const double t_pf = tensor.config().frame_period();
  const auto n_frames = tensor.n_frames();

  ChangepointVideo video;
  video.width = tensor.width();
  video.height = tensor.height();
  video.total_exposure = static_cast<double>(n_frames) * t_pf;
  video.profiles.resize(n_px);

  parallel_for(
      n_px,
      [&](std::size_t px) {
        const int row = static_cast<int>(px) / tensor.width();
        const int col = static_cast<int>(px) % tensor.width();
        // segment frame edges: 0, interior boundaries, n_frames
        std::vector<std::size_t> edges{0};
        for (uint32_t f : frame_boundaries[px])
          if (f > 0 && f < n_frames) edges.push_back(f);
        edges.push_back(n_frames);
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

        auto& profile = video.profiles[px];
        profile.breakpoints.reserve(edges.size());
        profile.levels.reserve(edges.size() - 1);
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
          profile.breakpoints.push_back(static_cast<double>(edges[k]) * t_pf);
          profile.levels.push_back(level_of(row, col, edges[k], edges[k + 1]));
        }
        profile.breakpoints.push_back(video.total_exposure);
      },
      threads);
  return video;
}

}  // namespace detail

/// Interior changepoint boundaries (measurement indices) converted to the
/// photon-frame index where each boundary measurement's detection landed.
inline std::vector<uint32_t> boundary_frames(const ChangepointSet& cps,
                                             const InterArrivalSeries& series) {
  std::vector<uint32_t> frames;
  frames.reserve(cps.interior_count());
  for (std::size_t b : cps.interior()) {
    if (b >= series.size()) throw InputError("boundary_frames: boundary outside series");
    frames.push_back(series.frame_index_of[b]);
  }
  return frames;
}

/// Build the changepoint video from per-pixel photon-frame boundaries (the
/// online + densify path produces these directly). Segment levels come from
/// the timestamp MLE over each segment's frame range.
inline ChangepointVideo build_cpv_frames(const PhotonFrameTensor& tensor,
                                         const std::vector<std::vector<uint32_t>>& frame_boundaries,
                                         unsigned threads = 0) {
  return detail::build_profiles(
      tensor, frame_boundaries,
      [&](int row, int col, std::size_t f0, std::size_t f1) {
        const uint16_t sentinel = tensor.sentinel();
        uint64_t detections = 0, bins = 0;
        for (std::size_t f = f0; f < f1; ++f) {
          const uint16_t b = tensor.bin(f, row, col);
          bins += b;
          detections += (b != sentinel);
        }
        if (detections > 0 && bins == 0) {
          // every detection in bin 0: score each as half a bin
          return 2.0 / (tensor.config().detection_efficiency * tensor.config().bin_width);
        }
        return flux_from_counts(detections, bins, tensor.config());
      },
      threads);
}

/// Offline entry point: per-pixel changepoint sets over the inter-arrival
/// series. A changepoint's time is the start of the frame in which its
/// boundary measurement terminated; pixels without interior changepoints
/// get a single full-exposure level.
inline ChangepointVideo build_cpv(const PhotonFrameTensor& tensor,
                                  const std::vector<ChangepointSet>& changepoints,
                                  const std::vector<InterArrivalSeries>& series,
                                  unsigned threads = 0) {
  if (changepoints.size() != tensor.n_pixels() || series.size() != tensor.n_pixels())
    throw InputError("build_cpv: per-pixel input size mismatch");
  std::vector<std::vector<uint32_t>> frames(tensor.n_pixels());
  for (std::size_t px = 0; px < frames.size(); ++px)
    frames[px] = boundary_frames(changepoints[px], series[px]);
  return build_cpv_frames(tensor, frames, threads);
}

/// Binary-data variant: levels from the QIS MLE, saturation capped so the
/// video stays finite.
inline ChangepointVideo build_cpv_qis(const QisFrameTensor& tensor,
                                      const std::vector<std::vector<uint32_t>>& frame_boundaries,
                                      unsigned threads = 0) {
  return detail::build_profiles(
      tensor, frame_boundaries,
      [&](int row, int col, std::size_t f0, std::size_t f1) {
        uint64_t ones = 0;
        for (std::size_t f = f0; f < f1; ++f) ones += tensor.count(f, row, col);
        return flux_from_binary_counts_capped(ones, f1 - f0, tensor.config());
      },
      threads);
}

// ============================================================================
// Adaptive sampling
// ============================================================================

/// Sample the video at t = 0 and then at every instant when the fraction of
/// pixels that have switched to a new flux level since the previous sample
/// reaches switch_fraction. A pixel is counted once per sampling interval
/// no matter how many times it switched.
inline std::vector<std::pair<double, FluxImage>> sample_cpv(const ChangepointVideo& video,
                                                            double switch_fraction = 0.01) {
  if (!(switch_fraction > 0.0) || switch_fraction > 1.0)
    throw InputError("sample_cpv: switch_fraction must be in (0, 1]");
  const std::size_t n_px = video.profiles.size();
  if (n_px == 0) throw InputError("sample_cpv: empty video");

  struct Event {
    double time;
    uint32_t pixel;
  };
  std::vector<Event> events;
  for (std::size_t px = 0; px < n_px; ++px) {
    const auto& bp = video.profiles[px].breakpoints;
    for (std::size_t k = 1; k + 1 < bp.size(); ++k)
      events.push_back({bp[k], static_cast<uint32_t>(px)});
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.time != b.time ? a.time < b.time : a.pixel < b.pixel;
  });

  std::vector<std::pair<double, FluxImage>> out;
  out.emplace_back(0.0, video.frame_at(0.0));

  const auto needed =
      static_cast<std::size_t>(std::max(1.0, std::ceil(switch_fraction * static_cast<double>(n_px))));
  std::vector<uint32_t> marked(n_px, 0);
  uint32_t epoch = 1;
  std::size_t switched = 0;
  std::size_t i = 0;
  while (i < events.size()) {
    // process all events at one time instant together
    const double t = events[i].time;
    while (i < events.size() && events[i].time == t) {
      auto& m = marked[events[i].pixel];
      if (m != epoch) {
        m = epoch;
        ++switched;
      }
      ++i;
    }
    if (switched >= needed && t > 0.0) {
      out.emplace_back(t, video.frame_at(t));
      ++epoch;
      switched = 0;
    }
  }
  return out;
}

}  // namespace cpv
