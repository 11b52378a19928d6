#pragma once
#include <cmath>

#include "cpv/image.hpp"
#include "cpv/transform.hpp"

namespace cpv {

/// Bilinear sample at real coordinates (x = col, y = row). Outside the
/// image returns `background` and clears *inside if given. The valid domain
/// is the convex hull of pixel centers, [0, W-1] x [0, H-1].
inline double bilinear_sample(const FluxImage& img, double x, double y, double background = 0.0,
                              bool* inside = nullptr) {
  if (x < 0.0 || y < 0.0 || x > img.width() - 1.0 || y > img.height() - 1.0) {
    if (inside) *inside = false;
    return background;
  }
  if (inside) *inside = true;
  int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  if (x0 == img.width() - 1) --x0;
  if (y0 == img.height() - 1) --y0;
  if (x0 < 0) x0 = 0;
  if (y0 < 0) y0 = 0;
  const double fx = x - x0, fy = y - y0;
  const double v00 = img.at(y0, x0), v01 = img.at(y0, x0 + 1);
  const double v10 = img.at(y0 + 1, x0), v11 = img.at(y0 + 1, x0 + 1);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
}

/// Render the image as seen after scene motion `motion`: out(p) =
/// in(motion^{-1}(p)), resampled bilinearly; uncovered pixels take
/// `background`.
inline FluxImage warp_image(const FluxImage& img, const EuclideanTransform& motion,
                            double background = 0.0) {
  FluxImage out(img.width(), img.height());
  const auto m = motion.inverse().matrix();
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      const double sx = m[0] * c + m[1] * r + m[2];
      const double sy = m[3] * c + m[4] * r + m[5];
      out.at(r, c) = bilinear_sample(img, sx, sy, background);
    }
  }
  return out;
}

/// Average of factor x factor blocks; image dims must be divisible.
inline FluxImage box_downsample(const FluxImage& img, int factor) {
  if (factor < 1) throw InputError("box_downsample: factor must be >= 1");
  if (factor == 1) return img;
  if (img.width() % factor != 0 || img.height() % factor != 0)
    throw InputError("box_downsample: dimensions not divisible by factor");
  FluxImage out(img.width() / factor, img.height() / factor);
  const double inv_area = 1.0 / (static_cast<double>(factor) * factor);
  for (int r = 0; r < out.height(); ++r)
    for (int c = 0; c < out.width(); ++c) {
      double s = 0.0;
      for (int dr = 0; dr < factor; ++dr)
        for (int dc = 0; dc < factor; ++dc) s += img.at(r * factor + dr, c * factor + dc);
      out.at(r, c) = s * inv_area;
    }
  return out;
}

/// Pixel replication (zero-order hold) for images.
inline FluxImage upsample_replicate(const FluxImage& img, int factor_x, int factor_y) {
  if (factor_x < 1 || factor_y < 1) throw InputError("upsample_replicate: factors must be >= 1");
  FluxImage out(img.width() * factor_x, img.height() * factor_y);
  for (int r = 0; r < out.height(); ++r)
    for (int c = 0; c < out.width(); ++c) out.at(r, c) = img.at(r / factor_y, c / factor_x);
  return out;
}

/// Central-difference gradients (one-sided at the borders).
inline void gradient_images(const FluxImage& img, FluxImage& gx, FluxImage& gy) {
  const int w = img.width(), h = img.height();
  gx = FluxImage(w, h);
  gy = FluxImage(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int c0 = c > 0 ? c - 1 : c, c1 = c < w - 1 ? c + 1 : c;
      const int r0 = r > 0 ? r - 1 : r, r1 = r < h - 1 ? r + 1 : r;
      gx.at(r, c) = c1 > c0 ? (img.at(r, c1) - img.at(r, c0)) / static_cast<double>(c1 - c0) : 0.0;
      gy.at(r, c) = r1 > r0 ? (img.at(r1, c) - img.at(r0, c)) / static_cast<double>(r1 - r0) : 0.0;
    }
  }
}

}  // namespace cpv
