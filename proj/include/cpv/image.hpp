#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "cpv/errors.hpp"

namespace cpv {

/// H x W map of photon flux in photons/second, row-major. The pixel at
/// (row r, col c) has spatial coordinates x = c, y = r (integer pixel
/// centers), the convention used by all warping and registration code.
class FluxImage {
 public:
  FluxImage() = default;
  FluxImage(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        values_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw InputError("FluxImage: negative dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& at(int row, int col) { return values_[idx(row, col)]; }
  double at(int row, int col) const { return values_[idx(row, col)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const FluxImage& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  std::size_t idx(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

inline std::pair<double, double> min_max(const FluxImage& img) {
  if (img.empty()) return {0.0, 0.0};
  auto [lo, hi] = std::minmax_element(img.values().begin(), img.values().end());
  return {*lo, *hi};
}

inline double mean_value(const FluxImage& img) {
  if (img.empty()) return 0.0;
  double s = 0.0;
  for (double v : img.values()) s += v;
  return s / static_cast<double>(img.size());
}

/// Compress dynamic range for registration: v -> log(v + eps) with eps tied
/// to the image maximum. Flux maps are heavy-tailed (short virtual
/// exposures can spike far above the true flux), and correlation-based
/// alignment needs the tail tamed; a monotone tone map leaves the
/// recoverable warp unchanged.
inline FluxImage log_tone_map(const FluxImage& img, double eps_scale = 1e-6) {
  auto [lo, hi] = min_max(img);
  FluxImage out(img.width(), img.height());
  if (!(hi > 0.0)) return out;
  const double eps = eps_scale * hi;
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = std::log(img[i] + eps);
  return out;
}

/// Linearly map an image in relative units onto [min_flux, max_flux]
/// photons/second. A flat input maps everywhere to min_flux.
inline FluxImage scale_to_flux(const FluxImage& img, double min_flux, double max_flux) {
  if (!(min_flux >= 0.0) || !(max_flux >= min_flux))
    throw InputError("scale_to_flux: need 0 <= min_flux <= max_flux");
  auto [lo, hi] = min_max(img);
  FluxImage out(img.width(), img.height());
  const double span = hi - lo;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double t = span > 0.0 ? (img[i] - lo) / span : 0.0;
    out[i] = min_flux + t * (max_flux - min_flux);
  }
  return out;
}

}  // namespace cpv
