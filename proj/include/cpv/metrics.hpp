#pragma once
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cpv/detect.hpp"
#include "cpv/errors.hpp"
#include "cpv/image.hpp"
#include "cpv/sensor.hpp"

namespace cpv {

/// Reconstruction quality in decibels:
///   20 log10( rms(truth) / rms(truth - estimate) )
/// capped at 300 dB for exact matches so comparisons stay finite.
inline double snr_db(const FluxImage& estimate, const FluxImage& truth) {
  if (!estimate.same_shape(truth)) throw InputError("snr_db: dimension mismatch");
  if (estimate.empty()) throw InputError("snr_db: empty images");
  double signal = 0.0, error = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    signal += truth[i] * truth[i];
    const double d = truth[i] - estimate[i];
    error += d * d;
  }
  if (!(signal > 0.0)) throw InputError("snr_db: ground truth is all zero");
  if (error == 0.0) return 300.0;
  return std::min(300.0, 10.0 * std::log10(signal / error));
}

/// Same metric over a rectangular region [row0, row1] x [col0, col1].
inline double snr_db_region(const FluxImage& estimate, const FluxImage& truth, int row0, int col0,
                            int row1, int col1) {
  if (!estimate.same_shape(truth)) throw InputError("snr_db_region: dimension mismatch");
  if (row0 < 0 || col0 < 0 || row1 >= truth.height() || col1 >= truth.width() || row0 > row1 ||
      col0 > col1)
    throw InputError("snr_db_region: bad region");
  double signal = 0.0, error = 0.0;
  for (int r = row0; r <= row1; ++r)
    for (int c = col0; c <= col1; ++c) {
      const double t = truth.at(r, c);
      const double d = t - estimate.at(r, c);
      signal += t * t;
      error += d * d;
    }
  if (!(signal > 0.0)) throw InputError("snr_db_region: ground truth is all zero in region");
  if (error == 0.0) return 300.0;
  return std::min(300.0, 10.0 * std::log10(signal / error));
}

/// Absolute difference between detected interior changepoints and the true
/// interior count.
inline std::size_t annotation_error(const ChangepointSet& detected, std::size_t true_interior) {
  const std::size_t got = detected.interior_count();
  return got > true_interior ? got - true_interior : true_interior - got;
}

// ============================================================================
// Fixed-window comparison detector
// ============================================================================

/// The conventional approach: split the frame stream into fixed windows,
/// estimate the per-window detection probability with an Agresti-Coull
/// interval, and call a changepoint wherever consecutive windows'
/// confidence intervals do not overlap.
struct FixedWindowDetector {
  std::size_t window = 50;
  double z = 1.96;

  ChangepointSet detect(std::span<const uint16_t> frame_bins, const SensorConfig& config) const {
    if (window < 1) throw InputError("FixedWindowDetector: window must be >= 1");
    const uint16_t sentinel = static_cast<uint16_t>(config.bins_per_frame);
    const std::size_t n_windows = frame_bins.size() / window;  // trailing partial ignored
    std::vector<double> lo(n_windows), hi(n_windows);
    for (std::size_t wdx = 0; wdx < n_windows; ++wdx) {
      uint64_t k = 0;
      for (std::size_t f = wdx * window; f < (wdx + 1) * window; ++f)
        k += (frame_bins[f] != sentinel);
      const double n_tilde = static_cast<double>(window) + z * z;
      const double p_tilde = (static_cast<double>(k) + z * z / 2.0) / n_tilde;
      const double half = z * std::sqrt(p_tilde * (1.0 - p_tilde) / n_tilde);
      lo[wdx] = p_tilde - half;
      hi[wdx] = p_tilde + half;
    }
    ChangepointSet out;
    out.boundaries.push_back(0);
    for (std::size_t wdx = 0; wdx + 1 < n_windows; ++wdx)
      if (lo[wdx + 1] > hi[wdx] || lo[wdx] > hi[wdx + 1])
        out.boundaries.push_back((wdx + 1) * window);
    out.boundaries.push_back(frame_bins.size());
    return out;
  }
};

}  // namespace cpv
