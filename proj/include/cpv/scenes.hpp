#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cpv/image.hpp"
#include "cpv/rng.hpp"

namespace cpv {

// Procedural test scenes in relative units [0, 1]; scale_to_flux maps them
// onto a photon-flux range.

namespace detail {

inline double hash_noise(int x, int y, uint64_t seed) {
  uint64_t v = (static_cast<uint64_t>(static_cast<uint32_t>(x)) << 32) |
               static_cast<uint32_t>(y);
  v ^= seed + 0x9e3779b97f4a7c15ULL;
  v ^= v >> 30;
  v *= 0xbf58476d1ce4e5b9ULL;
  v ^= v >> 27;
  v *= 0x94d049bb133111ebULL;
  v ^= v >> 31;
  return static_cast<double>(v >> 11) * 0x1.0p-53;
}

/// Smooth value noise: bilinear interpolation of lattice noise at the given
/// cell size.
inline double value_noise(double x, double y, int cell, uint64_t seed) {
  const double gx = x / cell, gy = y / cell;
  const int x0 = static_cast<int>(std::floor(gx)), y0 = static_cast<int>(std::floor(gy));
  const double fx = gx - x0, fy = gy - y0;
  const double sx = fx * fx * (3.0 - 2.0 * fx);
  const double sy = fy * fy * (3.0 - 2.0 * fy);
  const double v00 = hash_noise(x0, y0, seed), v01 = hash_noise(x0 + 1, y0, seed);
  const double v10 = hash_noise(x0, y0 + 1, seed), v11 = hash_noise(x0 + 1, y0 + 1, seed);
  return (1.0 - sy) * ((1.0 - sx) * v00 + sx * v01) + sy * ((1.0 - sx) * v10 + sx * v11);
}

inline double fractal_noise(double x, double y, int base_cell, int octaves, uint64_t seed) {
  double total = 0.0, amp = 1.0, norm = 0.0;
  int cell = base_cell;
  for (int o = 0; o < octaves; ++o) {
    total += amp * value_noise(x, y, std::max(1, cell), seed + o * 1315423911ULL);
    norm += amp;
    amp *= 0.5;
    cell /= 2;
  }
  return total / norm;
}

}  // namespace detail

/// Speckled full-frame texture; plenty of gradient structure everywhere,
/// the workhorse for registration tests.
inline FluxImage speckle_scene(int size, uint64_t seed = 0) {
  FluxImage img(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      img.at(r, c) = 0.15 + 0.85 * detail::fractal_noise(c, r, size / 8, 4, seed);
  return img;
}

/// Textured disc on a dark background (the rotating-fruit stand-in): a
/// bright rim, radial segment structure, and speckle so rotation is
/// observable everywhere on the disc.
inline FluxImage orange_scene(int size, uint64_t seed = 0) {
  FluxImage img(size, size, 0.02);
  const double cx = (size - 1) / 2.0, cy = (size - 1) / 2.0;
  const double radius = 0.42 * size;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double dx = c - cx, dy = r - cy;
      const double rho = std::sqrt(dx * dx + dy * dy);
      if (rho > radius) continue;
      const double angle = std::atan2(dy, dx);
      const double segments = 0.12 * std::cos(8.0 * angle) * (rho / radius);
      const double texture = 0.35 * detail::fractal_noise(c, r, size / 10, 3, seed);
      const double rim = rho > 0.92 * radius ? 0.15 : 0.0;
      img.at(r, c) = std::clamp(0.45 + segments + texture + rim, 0.05, 1.0);
    }
  return img;
}

/// Checkerboard with mild speckle, for translation scenes.
inline FluxImage checkerboard_scene(int size, int square = 16, uint64_t seed = 0) {
  FluxImage img(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const bool dark = ((r / square) + (c / square)) % 2 == 0;
      const double noise = 0.1 * detail::hash_noise(c, r, seed);
      img.at(r, c) = (dark ? 0.15 : 0.75) + noise;
    }
  return img;
}

// ============================================================================
// The two-car scene
// ============================================================================

/// A toy car sprite: body rectangle with a cabin block and darker wheels,
/// like the physical toys: even a low-contrast body carries high-contrast
/// sub-features at the wheels, which is what edge detection keys on.
struct CarSprite {
  int length = 24, height = 10;
  double body = 0.6;    // relative intensity of the body
  double cabin = 0.5;
  double wheels = 0.12;
  double start_col = 0.0;  // leading-edge position at t = 0 (pixels)
  double row = 0.0;        // top of the body
  double travel = 100.0;   // pixels moved over the whole capture (to the right)

  double col_at(double u) const { return start_col + travel * u; }  // u in [0,1]
};

struct CarsScene {
  int width = 160, height = 96;
  double background = 0.1;
  CarSprite fast;  // high contrast, long travel
  CarSprite slow;  // low contrast, short travel

  /// Render the scene at capture fraction u in [0, 1] with sub-pixel
  /// positions (coverage-weighted columns at the sprite edges).
  FluxImage render(double u) const {
    FluxImage img(width, height, background);
    draw_car(img, slow, slow.col_at(u));
    draw_car(img, fast, fast.col_at(u));
    return img;
  }

  /// Axis-aligned box covering a car at capture fraction u, with margin.
  std::array<int, 4> car_box(const CarSprite& car, double u, int margin) const {
    const int c0 = static_cast<int>(std::floor(car.col_at(u))) - margin;
    const int r0 = static_cast<int>(car.row) - margin;
    const int c1 = static_cast<int>(std::ceil(car.col_at(u))) + car.length + margin;
    const int r1 = static_cast<int>(car.row) + car.height + 3 + margin;
    return {std::max(0, r0), std::max(0, c0), std::min(height - 1, r1), std::min(width - 1, c1)};
  }

 private:
  static void fill_rect(FluxImage& img, double c0, double r0, double c1, double r1, double value) {
    // coverage-weighted horizontal edges keep sub-pixel motion smooth
    const int ri0 = std::max(0, static_cast<int>(std::floor(r0)));
    const int ri1 = std::min(img.height() - 1, static_cast<int>(std::ceil(r1)) - 1);
    const int ci0 = std::max(0, static_cast<int>(std::floor(c0)));
    const int ci1 = std::min(img.width() - 1, static_cast<int>(std::ceil(c1)) - 1);
    for (int r = ri0; r <= ri1; ++r)
      for (int c = ci0; c <= ci1; ++c) {
        const double cover_c = std::min<double>(c + 1.0, c1) - std::max<double>(c, c0);
        const double cover_r = std::min<double>(r + 1.0, r1) - std::max<double>(r, r0);
        const double cover = std::clamp(cover_c, 0.0, 1.0) * std::clamp(cover_r, 0.0, 1.0);
        if (cover <= 0.0) continue;
        img.at(r, c) = (1.0 - cover) * img.at(r, c) + cover * value;
      }
  }

  static void draw_car(FluxImage& img, const CarSprite& car, double col) {
    const double r0 = car.row;
    fill_rect(img, col, r0, col + car.length, r0 + car.height, car.body);
    // cabin on the rear half
    fill_rect(img, col + car.length * 0.15, r0 - 3.0, col + car.length * 0.55, r0, car.cabin);
    // wheels under the body
    const double wheel_r = r0 + car.height;
    fill_rect(img, col + 2.0, wheel_r, col + 7.0, wheel_r + 3.0, car.wheels);
    fill_rect(img, col + car.length - 7.0, wheel_r, col + car.length - 2.0, wheel_r + 3.0,
              car.wheels);
  }
};

/// The two-toy-cars protocol: a dark fast car (contrast 5 against the
/// background) and a bright slow car (contrast 1.2), both rolling the same
/// direction.
inline CarsScene two_cars_scene() {
  CarsScene scene;
  scene.background = 0.25;
  scene.fast.body = scene.background / 5.0;  // contrast 5.0, darker than background
  scene.fast.cabin = scene.background / 4.0;
  scene.fast.wheels = 0.04;
  scene.fast.length = 30;
  scene.fast.height = 12;
  scene.fast.row = 58.0;
  scene.fast.start_col = 4.0;
  scene.fast.travel = 143.0 - scene.fast.length;  // leading edge sweep keeps it in frame
  scene.slow.body = scene.background * 1.2;  // contrast 1.2, barely brighter
  scene.slow.cabin = scene.background * 1.1;
  scene.slow.wheels = 0.07;
  scene.slow.length = 26;
  scene.slow.height = 11;
  scene.slow.row = 24.0;
  scene.slow.start_col = 30.0;
  scene.slow.travel = 48.0;
  return scene;
}

}  // namespace cpv
