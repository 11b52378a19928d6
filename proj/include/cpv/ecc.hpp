#pragma once
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cpv/errors.hpp"
#include "cpv/image.hpp"
#include "cpv/transform.hpp"
#include "cpv/warp.hpp"

namespace cpv {

struct EccOptions {
  int max_iterations = 60;
  double improvement_tol = 1e-6;  // stop when the coefficient gain drops below this
  double min_overlap = 0.5;       // fraction of pixels a candidate needs to count as best
  bool rotation_search = false;   // seed a coarse rotation sweep on cold, decorrelated starts
};

struct EccResult {
  EuclideanTransform transform;  // motion src -> dst: warp_image(src, transform) ~ dst
  double ecc = 0.0;              // zero-mean unit-norm correlation at the solution
  bool converged = false;
  int iterations = 0;
};

namespace detail {

inline std::array<double, 3> solve3(const std::array<double, 9>& a,
                                    const std::array<double, 3>& b) {
  // Gaussian elimination with partial pivoting on a 3x3 system
  double m[3][4] = {{a[0], a[1], a[2], b[0]}, {a[3], a[4], a[5], b[1]}, {a[6], a[7], a[8], b[2]}};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (std::abs(m[pivot][col]) < 1e-300) throw AlignmentError("ecc_align: singular normal matrix");
    if (pivot != col)
      for (int c = 0; c < 4; ++c) std::swap(m[pivot][c], m[col][c]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

}  // namespace detail

/// Enhanced-correlation-coefficient alignment (Evangelidis & Psarakis) for
/// the planar Euclidean model. Finds the motion src -> dst maximizing the
/// zero-mean, unit-norm correlation between dst and the warped src with
/// forward-additive Gauss-Newton updates on (theta, tx, ty); the objective
/// is invariant to affine intensity scaling of either image. Non-convergence
/// returns the best solution seen with converged = false; a zero-variance
/// input raises AlignmentError.
inline EccResult ecc_align(const FluxImage& src, const FluxImage& dst,
                           const EuclideanTransform& init, const EccOptions& options = {}) {
  if (!src.same_shape(dst)) throw InputError("ecc_align: image sizes differ");
  if (src.width() < 4 || src.height() < 4) throw AlignmentError("ecc_align: image too small");

  const int w = src.width(), h = src.height();
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;

  {
    const double dm = mean_value(dst), sm = mean_value(src);
    double dvar = 0.0, svar = 0.0;
    for (double v : dst.values()) dvar += (v - dm) * (v - dm);
    for (double v : src.values()) svar += (v - sm) * (v - sm);
    if (!(dvar > 0.0) || !(svar > 0.0)) throw AlignmentError("ecc_align: zero intensity variance");
  }

  FluxImage grad_x, grad_y;
  gradient_images(src, grad_x, grad_y);

  // optimize the sampling warp W = transform^{-1} (dst grid -> src coords)
  EuclideanTransform warp = with_center(init, cx, cy).inverse();

  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> iw(n), j_theta(n), j_tx(n), j_ty(n);
  std::vector<uint8_t> mask(n);

  EccResult best;
  best.transform = with_center(init, cx, cy);
  best.ecc = -2.0;
  double last_rho = -2.0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const auto m = warp.matrix();
    const double c = std::cos(warp.theta), s = std::sin(warp.theta);

    // warp src and its gradients onto the dst grid
    std::size_t count = 0;
    double sum_iw = 0.0, sum_ir = 0.0;
    for (int r = 0; r < h; ++r)
      for (int col = 0; col < w; ++col) {
        const std::size_t i = static_cast<std::size_t>(r) * w + col;
        const double sx = m[0] * col + m[1] * r + m[2];
        const double sy = m[3] * col + m[4] * r + m[5];
        bool inside = false;
        const double v = bilinear_sample(src, sx, sy, 0.0, &inside);
        mask[i] = inside;
        if (!inside) continue;
        const double gx = bilinear_sample(grad_x, sx, sy);
        const double gy = bilinear_sample(grad_y, sx, sy);
        const double dwx_dtheta = -s * col + c * r + warp.rx * s + warp.ry * c;
        const double dwy_dtheta = -c * col - s * r + warp.ry * s - warp.rx * c;
        iw[i] = v;
        j_theta[i] = gx * dwx_dtheta + gy * dwy_dtheta;
        j_tx[i] = gx;
        j_ty[i] = gy;
        ++count;
        sum_iw += v;
        sum_ir += dst[i];
      }
    if (count < 16) break;  // warped out of the frame; keep best-so-far

    const double mean_iw = sum_iw / static_cast<double>(count);
    const double mean_ir = sum_ir / static_cast<double>(count);

    double norm_iw2 = 0.0, norm_ir2 = 0.0, dot_ir_iw = 0.0;
    std::array<double, 9> hess{};
    std::array<double, 3> proj_iw{}, proj_ir{};
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      const double a = iw[i] - mean_iw;
      const double b = dst[i] - mean_ir;
      norm_iw2 += a * a;
      norm_ir2 += b * b;
      dot_ir_iw += a * b;
      const double g[3] = {j_theta[i], j_tx[i], j_ty[i]};
      for (int p = 0; p < 3; ++p) {
        proj_iw[p] += g[p] * a;
        proj_ir[p] += g[p] * b;
        for (int q = p; q < 3; ++q) hess[p * 3 + q] += g[p] * g[q];
      }
    }
    hess[3] = hess[1];
    hess[6] = hess[2];
    hess[7] = hess[5];

    if (!(norm_iw2 > 0.0) || !(norm_ir2 > 0.0)) break;  // flat overlap; keep best-so-far

    const double rho = dot_ir_iw / std::sqrt(norm_iw2 * norm_ir2);
    // a shrinking overlap can correlate by chance; only well-covered warps
    // may become the answer
    const bool enough_overlap =
        static_cast<double>(count) >= options.min_overlap * static_cast<double>(n);
    if (rho > best.ecc && enough_overlap) {
      best.ecc = rho;
      best.transform = with_center(warp.inverse(), cx, cy);
      best.iterations = iter;
    }
    if (iter > 0 && rho >= last_rho && rho - last_rho < options.improvement_tol) {
      best.converged = true;
      break;
    }
    last_rho = rho;

    // Evangelidis-Psarakis update: delta = H^{-1} G^T (lambda * ir - iw)
    std::array<double, 3> hinv_piw, hinv_pir;
    try {
      hinv_piw = detail::solve3(hess, proj_iw);
      hinv_pir = detail::solve3(hess, proj_ir);
    } catch (const AlignmentError&) {
      break;  // flat gradients; keep best-so-far
    }
    const double iw_p_iw =
        proj_iw[0] * hinv_piw[0] + proj_iw[1] * hinv_piw[1] + proj_iw[2] * hinv_piw[2];
    const double ir_p_iw =
        proj_ir[0] * hinv_piw[0] + proj_ir[1] * hinv_piw[1] + proj_ir[2] * hinv_piw[2];
    const double num = norm_iw2 - iw_p_iw;
    const double den = dot_ir_iw - ir_p_iw;
    if (!(den > 0.0)) break;  // uncorrelated or outside the model's validity; keep best
    const double lambda = num / den;

    std::array<double, 3> rhs{};
    for (int p = 0; p < 3; ++p) rhs[p] = lambda * proj_ir[p] - proj_iw[p];
    std::array<double, 3> delta;
    try {
      delta = detail::solve3(hess, rhs);
    } catch (const AlignmentError&) {
      break;
    }
    // clamp Gauss-Newton overshoots; a sane step is a fraction of the frame
    const double max_shift = 0.25 * std::min(w, h);
    warp.theta += std::clamp(delta[0], -0.35, 0.35);
    warp.tx += std::clamp(delta[1], -max_shift, max_shift);
    warp.ty += std::clamp(delta[2], -max_shift, max_shift);
  }

  if (best.ecc < -1.0) throw AlignmentError("ecc_align: no usable overlap");
  return best;
}

/// Coarse-to-fine ECC: align on a box-downsampled pyramid and propagate the
/// estimate to full resolution. Extends the capture range well beyond the
/// single-level basin (large rotations, multi-pixel shifts) at minor cost.
/// levels = 0 picks a depth that leaves the coarsest image near 24 px.
inline EccResult ecc_align_pyramid(const FluxImage& src, const FluxImage& dst,
                                   const EuclideanTransform& init, const EccOptions& options = {},
                                   int levels = 0) {
  if (!src.same_shape(dst)) throw InputError("ecc_align: image sizes differ");
  if (levels <= 0) {
    levels = 1;
    int dim = std::min(src.width(), src.height());
    while (dim >= 24 && levels < 6) {
      dim /= 2;
      ++levels;
    }
  }

  std::vector<FluxImage> src_pyr{src}, dst_pyr{dst};
  for (int l = 1; l < levels; ++l) {
    const FluxImage& ps = src_pyr.back();
    if (ps.width() / 2 < 8 || ps.height() / 2 < 8) break;
    const int w2 = (ps.width() / 2) * 2, h2 = (ps.height() / 2) * 2;
    auto crop = [&](const FluxImage& img) {
      FluxImage out(w2, h2);
      for (int r = 0; r < h2; ++r)
        for (int c = 0; c < w2; ++c) out.at(r, c) = img.at(r, c);
      return box_downsample(out, 2);
    };
    src_pyr.push_back(crop(src_pyr.back()));
    dst_pyr.push_back(crop(dst_pyr.back()));
  }

  const double scale = static_cast<double>(1 << (src_pyr.size() - 1));
  EuclideanTransform current = init;
  current.tx /= scale;
  current.ty /= scale;
  EccResult res;
  for (std::size_t l = src_pyr.size(); l-- > 0;) {
    const FluxImage& s = src_pyr[l];
    const double cx = (s.width() - 1) / 2.0, cy = (s.height() - 1) / 2.0;
    current.rx = cx;
    current.ry = cy;
    res = ecc_align(s, dst_pyr[l], current, options);
    if (options.rotation_search && l + 1 == src_pyr.size() && res.ecc < 0.4) {
      // decorrelated at the coarsest level: seed a small rotation search
      for (double seed_deg = -12.0; seed_deg <= 12.0; seed_deg += 3.0) {
        EuclideanTransform seed = current;
        seed.theta = current.theta + seed_deg * M_PI / 180.0;
        try {
          const auto trial = ecc_align(s, dst_pyr[l], seed, options);
          if (trial.ecc > res.ecc) res = trial;
        } catch (const AlignmentError&) {
        }
      }
    }
    current = res.transform;
    if (l > 0) {
      current.tx *= 2.0;
      current.ty *= 2.0;
    }
  }
  return res;
}

}  // namespace cpv
