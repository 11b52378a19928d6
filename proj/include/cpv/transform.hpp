#pragma once
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cpv/errors.hpp"

namespace cpv {

/// Planar Euclidean motion: rotation by theta about (rx, ry) plus a
/// translation (tx, ty), in the affine form
///
///   [  cos t   sin t   rx(1-cos t) + ry sin t + tx ]
///   [ -sin t   cos t   ry(1-cos t) - rx sin t + ty ]
///   [    0       0                 1               ]
///
/// Composition adds rotation angles exactly (theta is kept unwrapped so
/// long cumulative trajectories never lose turns) and re-derives the
/// translation from the matrix product for the shared rotation center.
struct EuclideanTransform {
  double theta = 0.0;  // radians
  double tx = 0.0, ty = 0.0;
  double rx = 0.0, ry = 0.0;  // rotation center, usually the image center

  static EuclideanTransform identity(double rx, double ry) { return {0.0, 0.0, 0.0, rx, ry}; }

  /// Row-major 2x3 affine matrix (third row is implicitly [0 0 1]).
  std::array<double, 6> matrix() const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c, s, rx * (1.0 - c) + ry * s + tx, -s, c, ry * (1.0 - c) - rx * s + ty};
  }

  void apply(double x, double y, double& out_x, double& out_y) const {
    const auto m = matrix();
    out_x = m[0] * x + m[1] * y + m[2];
    out_y = m[3] * x + m[4] * y + m[5];
  }

  /// Translation components implied by a given angle + matrix offset for
  /// this transform's center.
  static EuclideanTransform from_parts(double theta, double offset_x, double offset_y, double rx,
                                       double ry) {
    const double c = std::cos(theta), s = std::sin(theta);
    EuclideanTransform t;
    t.theta = theta;
    t.rx = rx;
    t.ry = ry;
    t.tx = offset_x - (rx * (1.0 - c) + ry * s);
    t.ty = offset_y - (ry * (1.0 - c) - rx * s);
    return t;
  }

  EuclideanTransform inverse() const {
    const auto m = matrix();
    // linear part transposes; offset maps through the transpose, negated
    const double ox = -(m[0] * m[2] + m[3] * m[5]);
    const double oy = -(m[1] * m[2] + m[4] * m[5]);
    return from_parts(-theta, ox, oy, rx, ry);
  }

  bool is_identity(double tol = 0.0) const {
    return std::abs(theta) <= tol && std::abs(tx) <= tol && std::abs(ty) <= tol;
  }
};

/// second o first (apply `first`, then `second`). Rotation centers must
/// match; the whole pipeline keeps one center per image size.
inline EuclideanTransform compose(const EuclideanTransform& second,
                                  const EuclideanTransform& first) {
  if (second.rx != first.rx || second.ry != first.ry)
    throw InputError("compose: mismatched rotation centers");
  const auto a = second.matrix(), b = first.matrix();
  const double ox = a[0] * b[2] + a[1] * b[5] + a[2];
  const double oy = a[3] * b[2] + a[4] * b[5] + a[5];
  return EuclideanTransform::from_parts(second.theta + first.theta, ox, oy, first.rx, first.ry);
}

/// Same geometric map expressed about a different rotation center.
inline EuclideanTransform with_center(const EuclideanTransform& t, double rx, double ry) {
  const auto m = t.matrix();
  return EuclideanTransform::from_parts(t.theta, m[2], m[5], rx, ry);
}

// ============================================================================
// Motion trajectories
// ============================================================================

/// Cumulative scene motion sampled at keyframe times, linearly interpolated
/// componentwise in (theta, tx, ty) between keyframes and clamped outside
/// their span. The transform at keyframe k maps reference-frame (t = 0)
/// coordinates to their position at that time; it is the identity at the
/// reference keyframe.
struct MotionTrajectory {
  std::vector<double> keyframe_times;
  std::vector<EuclideanTransform> keyframes;

  EuclideanTransform at_time(double t) const {
    if (keyframes.empty()) throw InputError("MotionTrajectory: no keyframes");
    if (keyframes.size() == 1 || t <= keyframe_times.front()) return keyframes.front();
    if (t >= keyframe_times.back()) return keyframes.back();
    std::size_t hi = 1;
    while (keyframe_times[hi] < t) ++hi;
    const std::size_t lo = hi - 1;
    const double span = keyframe_times[hi] - keyframe_times[lo];
    const double u = span > 0.0 ? (t - keyframe_times[lo]) / span : 0.0;
    const EuclideanTransform &a = keyframes[lo], &b = keyframes[hi];
    EuclideanTransform out = a;
    out.theta = a.theta + u * (b.theta - a.theta);
    out.tx = a.tx + u * (b.tx - a.tx);
    out.ty = a.ty + u * (b.ty - a.ty);
    return out;
  }
};

/// Build a trajectory from per-pair keyframe transforms already composed
/// into the common reference frame, then evaluate it at arbitrary times.
inline MotionTrajectory interpolate_trajectory(std::vector<EuclideanTransform> keyframe_transforms,
                                               std::vector<double> keyframe_times) {
  if (keyframe_transforms.size() != keyframe_times.size())
    throw InputError("interpolate_trajectory: times/transforms length mismatch");
  if (keyframe_transforms.empty()) throw InputError("interpolate_trajectory: empty keyframes");
  for (std::size_t i = 1; i < keyframe_times.size(); ++i)
    if (!(keyframe_times[i] > keyframe_times[i - 1]))
      throw InputError("interpolate_trajectory: keyframe times must be strictly increasing");
  MotionTrajectory traj;
  traj.keyframe_times = std::move(keyframe_times);
  traj.keyframes = std::move(keyframe_transforms);
  return traj;
}

}  // namespace cpv
