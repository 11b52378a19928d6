#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "cpv/detect.hpp"
#include "cpv/errors.hpp"
#include "cpv/tensor.hpp"

namespace cpv {

/// Posterior predictive of an exponential measurement under a
/// Gamma(shape, scale-rate... beta) prior after absorbing the run's data:
/// a Lomax density with shape alpha + N and scale beta + sum(x).
inline double lomax_predictive(double y, double shape, double scale) {
  if (!(y >= 0.0)) throw InputError("lomax_predictive: y must be >= 0");
  if (!(shape > 0.0) || !(scale > 0.0))
    throw InputError("lomax_predictive: shape and scale must be > 0");
  return std::exp(std::log(shape) + shape * std::log(scale) -
                  (shape + 1.0) * std::log(y + scale));
}

/// Bayesian online changepoint detection over one pixel's measurement
/// stream. Maintains the run-length posterior (probability that the last
/// flux change happened r measurements ago) under a constant hazard of one
/// change per `hazard` measurements. A changepoint is reported once the
/// posterior puts at least `emit_threshold` mass on run length equal to the
/// look-behind window, i.e. on a reset exactly `lookbehind` measurements in
/// the past; detection therefore lags the data by the look-behind latency.
struct OnlineDetectorState {
  double prior_shape = 1.0;    // Lomax(1, 100) prior predictive
  double prior_scale = 100.0;
  double hazard = 40.0;        // expected run length H
  int lookbehind = 30;         // measurements of latency, paper range 20-40
  double emit_threshold = 0.5;
  double truncate_below = 1e-12;

  struct Run {
    uint32_t length = 0;   // measurements since the hypothesized change
    double mass = 0.0;
    double duration_sum = 0.0;  // sum of those measurements
  };
  std::vector<Run> runs{Run{0, 1.0, 0.0}};
  uint64_t step = 0;                 // measurements consumed
  int64_t last_emitted = -1;

  double posterior_mass_total() const {
    double s = 0.0;
    for (const auto& r : runs) s += r.mass;
    return s;
  }
  /// P(run length == r) after the most recent update.
  double run_length_probability(uint32_t r) const {
    for (const auto& run : runs)
      if (run.length == r) return run.mass;
    return 0.0;
  }
};

/// Feed one measurement; returns the boundary index of a newly detected
/// changepoint (in measurement coordinates, `lookbehind` steps behind the
/// stream head) if the emission rule fires.
inline std::optional<std::size_t> detect_online(OnlineDetectorState& state, double x) {
  if (!(x >= 0.0)) throw InputError("detect_online: negative measurement");
  const double h = 1.0 / state.hazard;
  std::vector<OnlineDetectorState::Run> next;
  next.reserve(state.runs.size() + 1);
  double reset_mass = 0.0;
  double total = 0.0;
  next.push_back({0, 0.0, 0.0});  // placeholder for the reset hypothesis
  for (const auto& run : state.runs) {
    const double pred = lomax_predictive(
        x, state.prior_shape + static_cast<double>(run.length),
        state.prior_scale + run.duration_sum);
    const double moved = run.mass * pred;
    reset_mass += moved * h;
    const double grown = moved * (1.0 - h);
    if (grown > 0.0)
      next.push_back({run.length + 1, grown, run.duration_sum + x});
    total += moved;
  }
  next[0].mass = reset_mass;
  if (!(total > 0.0)) {
    // numerically dead posterior; restart from the prior
    next.assign(1, {0, 1.0, 0.0});
  } else {
    for (auto& run : next) run.mass /= total;
    // drop negligible hypotheses, then renormalize exactly
    std::vector<OnlineDetectorState::Run> pruned;
    pruned.reserve(next.size());
    double pruned_total = 0.0;
    for (const auto& run : next)
      if (run.mass >= state.truncate_below) {
        pruned.push_back(run);
        pruned_total += run.mass;
      }
    if (pruned.empty()) {
      pruned.push_back({0, 1.0, 0.0});
    } else {
      for (auto& run : pruned) run.mass /= pruned_total;
    }
    next.swap(pruned);
  }
  state.runs.swap(next);
  ++state.step;

  const auto w = static_cast<uint32_t>(state.lookbehind);
  if (state.step > w) {
    const double p = state.run_length_probability(w);
    if (p >= state.emit_threshold) {
      const auto boundary = static_cast<int64_t>(state.step - w);
      if (boundary > state.last_emitted) {
        state.last_emitted = boundary;
        return static_cast<std::size_t>(boundary);
      }
    }
  }
  return std::nullopt;
}

/// Offline-compatible wrapper: run the online detector over a whole series
/// and return the boundaries it emitted. Measurements are rescaled to
/// frame-period units first; the Lomax(1, 100) prior is calibrated for
/// inter-detection gaps of order one to a few hundred frames.
inline ChangepointSet detect_online_series(const InterArrivalSeries& series,
                                           OnlineDetectorState params = {}) {
  ChangepointSet out;
  out.penalty_used = 0.0;
  out.boundaries.push_back(0);
  OnlineDetectorState state = params;
  state.runs.assign(1, {0, 1.0, 0.0});
  state.step = 0;
  state.last_emitted = -1;
  const double to_frames = 1.0 / series.config.frame_period();
  for (double x : series.measurements) {
    const auto emitted = detect_online(state, x * to_frames);
    if (emitted && *emitted > 0 && *emitted < series.size())
      out.boundaries.push_back(*emitted);
  }
  out.boundaries.push_back(series.size());
  std::sort(out.boundaries.begin(), out.boundaries.end());
  out.boundaries.erase(std::unique(out.boundaries.begin(), out.boundaries.end()),
                       out.boundaries.end());
  return out;
}

/// Spread per-pixel emissions (as photon-frame indices) to every pixel in a
/// (2r+1)^2 neighborhood; union, deduplicated. Radius 0 is the identity.
inline std::vector<std::vector<uint32_t>> densify_changepoints(
    const std::vector<std::vector<uint32_t>>& emissions, int width, int height, int radius) {
  if (radius < 0) throw InputError("densify_changepoints: radius must be >= 0");
  if (emissions.size() != static_cast<std::size_t>(width) * height)
    throw InputError("densify_changepoints: emissions size mismatch");
  if (radius == 0) return emissions;
  std::vector<std::vector<uint32_t>> out(emissions.size());
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const auto& src = emissions[static_cast<std::size_t>(r) * width + c];
      if (src.empty()) continue;
      for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= height || cc < 0 || cc >= width) continue;
          auto& dst = out[static_cast<std::size_t>(rr) * width + cc];
          dst.insert(dst.end(), src.begin(), src.end());
        }
    }
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

}  // namespace cpv
