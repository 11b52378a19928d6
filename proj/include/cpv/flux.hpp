#pragma once
#include <cmath>
#include <cstdint>
#include <span>

#include "cpv/errors.hpp"
#include "cpv/sensor.hpp"
#include "cpv/tensor.hpp"

namespace cpv {

// ============================================================================
// Pixelwise maximum-likelihood flux estimators
// ============================================================================

/// MLE photon flux from frame timestamps: detections / (q * total time),
/// where a frame without a detection contributes the full frame period.
/// Works on integer bin totals so that different traversal orders over the
/// same data give bit-identical results.
inline double flux_from_counts(uint64_t detections, uint64_t duration_bins,
                               const SensorConfig& config) {
  if (detections == 0) return 0.0;
  if (duration_bins == 0)
    throw SaturationError("flux_from_counts: detections with zero accumulated time");
  return static_cast<double>(detections) /
         (config.detection_efficiency * (static_cast<double>(duration_bins) * config.bin_width));
}

/// Timestamp-domain form: t_i in [0, T_pf], with t_i = T_pf meaning no
/// detection in frame i.
inline double estimate_flux(std::span<const double> frame_times, const SensorConfig& config) {
  if (frame_times.empty()) throw InputError("estimate_flux: empty sequence");
  const double t_pf = config.frame_period();
  uint64_t detections = 0;
  double total = 0.0;
  for (double t : frame_times) {
    if (!(t >= 0.0) || t > t_pf) throw InputError("estimate_flux: timestamp outside [0, T_pf]");
    detections += (t != t_pf);
    total += t;
  }
  if (detections == 0) return 0.0;
  if (!(total > 0.0))
    throw SaturationError("estimate_flux: flux beyond measurable range (zero total time)");
  return static_cast<double>(detections) / (config.detection_efficiency * total);
}

/// Flux over a frame range of one tensor pixel, via the integer path.
inline double estimate_flux(const PhotonFrameTensor& t, int row, int col,
                            std::size_t frame_begin, std::size_t frame_end) {
  const uint16_t sentinel = t.sentinel();
  uint64_t detections = 0, bins = 0;
  for (std::size_t f = frame_begin; f < frame_end; ++f) {
    const uint16_t b = t.bin(f, row, col);
    bins += b;  // sentinel == bins_per_frame, the full frame in bins
    detections += (b != sentinel);
  }
  return flux_from_counts(detections, bins, t.config());
}

/// Binary-frame MLE: -ln(1 - p_hat) / (q * T_pf) with p_hat the detection
/// fraction. For QIS data the whole frame is one bin, so the frame period
/// plays the role of the bin width.
inline double flux_from_binary_counts(uint64_t ones, uint64_t n, const SensorConfig& config) {
  if (n == 0) throw InputError("flux_from_binary_counts: empty sequence");
  if (ones == 0) return 0.0;
  if (ones >= n)
    throw SaturationError("flux_from_binary_counts: saturated (every frame detected)");
  const double p_hat = static_cast<double>(ones) / static_cast<double>(n);
  return -std::log1p(-p_hat) / (config.detection_efficiency * config.frame_period());
}

inline double estimate_flux_qis(std::span<const uint8_t> counts, const SensorConfig& config) {
  if (counts.empty()) throw InputError("estimate_flux_qis: empty sequence");
  uint64_t ones = 0;
  for (uint8_t n : counts) {
    if (n > 1) throw InputError("estimate_flux_qis: values must be binary");
    ones += n;
  }
  return flux_from_binary_counts(ones, counts.size(), config);
}

/// Saturation-capped variant for image assembly, where a saturated pixel
/// must still store a finite value: a fully-detected run of n frames is
/// scored as if one frame were empty (p_hat = 1 - 1/n).
inline double flux_from_binary_counts_capped(uint64_t ones, uint64_t n,
                                             const SensorConfig& config) {
  if (n == 0) throw InputError("flux_from_binary_counts_capped: empty sequence");
  if (ones >= n) ones = n - 1;
  if (ones == 0) return 0.0;
  return flux_from_binary_counts(ones, n, config);
}

}  // namespace cpv
