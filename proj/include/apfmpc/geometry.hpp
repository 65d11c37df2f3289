// Copyright 2026 The apfmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <Eigen/Core>

namespace apfmpc {

using Vec2 = Eigen::Vector2d;

/// Wraps an angle into (-pi, pi].
inline double NormalizeAngle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (angle > -std::numbers::pi && angle <= std::numbers::pi) return angle;
  double wrapped = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (wrapped <= 0.0) wrapped += kTwoPi;
  return wrapped - std::numbers::pi;
}

/// Returns `angle` shifted by a multiple of 2*pi so that it lies within pi of
/// `reference`.
inline double UnwrapNear(double angle, double reference) {
  return reference + NormalizeAngle(angle - reference);
}

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Pose2D() = default;
  Pose2D(double x_in, double y_in, double heading_in)
      : x(x_in), y(y_in), heading(NormalizeAngle(heading_in)) {}

  Vec2 position() const { return {x, y}; }
};

/// A rectangle footprint centered at `center`, with `half_length` measured
/// along the heading and `half_width` perpendicular to it.
class OrientedRectangle {
 public:
  OrientedRectangle(const Pose2D& center, double half_length, double half_width)
      : center_(center), half_length_(half_length), half_width_(half_width) {
    if (!(half_length > 0.0) || !(half_width > 0.0)) {
      throw std::invalid_argument(
          "OrientedRectangle: half extents must be positive");
    }
  }

  const Pose2D& center() const { return center_; }
  double half_length() const { return half_length_; }
  double half_width() const { return half_width_; }

  OrientedRectangle WithPose(const Pose2D& pose) const {
    return OrientedRectangle(pose, half_length_, half_width_);
  }

  Vec2 axis_length() const {
    return {std::cos(center_.heading), std::sin(center_.heading)};
  }
  Vec2 axis_width() const {
    return {-std::sin(center_.heading), std::cos(center_.heading)};
  }

  /// Corners in counter-clockwise order starting from front-left.
  std::array<Vec2, 4> corners() const {
    const Vec2 c = center_.position();
    const Vec2 l = half_length_ * axis_length();
    const Vec2 w = half_width_ * axis_width();
    return {c + l + w, c - l + w, c - l - w, c + l - w};
  }

 private:
  Pose2D center_;
  double half_length_;
  double half_width_;
};

inline std::array<Vec2, 4> corners(const OrientedRectangle& rect) {
  return rect.corners();
}

struct ClosestPair {
  Vec2 on_a = Vec2::Zero();
  Vec2 on_b = Vec2::Zero();
  double distance = 0.0;
  /// on_a minus the center of rectangle A.
  Vec2 offset_a = Vec2::Zero();
};

namespace geometry_detail {

struct PointOnSegment {
  Vec2 point;
  double distance;
};

inline PointOnSegment ClosestOnSegment(const Vec2& p, const Vec2& s0,
                                       const Vec2& s1) {
  const Vec2 d = s1 - s0;
  const double len_sq = d.squaredNorm();
  double t = len_sq > 0.0 ? (p - s0).dot(d) / len_sq : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 q = s0 + t * d;
  return {q, (p - q).norm()};
}

// Projection interval of a rectangle onto an axis.
inline std::pair<double, double> Project(const OrientedRectangle& r,
                                         const Vec2& axis) {
  const double c = r.center().position().dot(axis);
  const double extent = r.half_length() * std::abs(r.axis_length().dot(axis)) +
                        r.half_width() * std::abs(r.axis_width().dot(axis));
  return {c - extent, c + extent};
}

}  // namespace geometry_detail

/// Separating-axis test. Touching rectangles count as intersecting.
inline bool Intersects(const OrientedRectangle& a, const OrientedRectangle& b) {
  const std::array<Vec2, 4> axes = {a.axis_length(), a.axis_width(),
                                    b.axis_length(), b.axis_width()};
  for (const Vec2& axis : axes) {
    const auto [a_lo, a_hi] = geometry_detail::Project(a, axis);
    const auto [b_lo, b_hi] = geometry_detail::Project(b, axis);
    if (a_hi < b_lo || b_hi < a_lo) return false;
  }
  return true;
}

/// Minimum-distance point pair between two rectangles.
///
/// Overlapping rectangles report distance 0 with both points at the midpoint
/// of the two centers. Among non-unique minima between parallel faces the
/// pair whose point on A is the midpoint of the overlapping face interval is
/// returned.
inline ClosestPair closest_pair(const OrientedRectangle& a,
                                const OrientedRectangle& b) {
  using geometry_detail::ClosestOnSegment;
  ClosestPair out;
  const Vec2 center_a = a.center().position();
  if (Intersects(a, b)) {
    out.on_a = 0.5 * (center_a + b.center().position());
    out.on_b = out.on_a;
    out.distance = 0.0;
    out.offset_a = out.on_a - center_a;
    return out;
  }

  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  // Vertices of A against edges of B.
  for (int v = 0; v < 4; ++v) {
    for (int e = 0; e < 4; ++e) {
      const auto hit = ClosestOnSegment(ca[v], cb[e], cb[(e + 1) % 4]);
      if (hit.distance < best) {
        best = hit.distance;
        out.on_a = ca[v];
        out.on_b = hit.point;
      }
    }
  }
  // Vertices of B against edges of A. Strict comparison keeps the A-vertex
  // candidate on ties so that the scan order alone decides.
  for (int v = 0; v < 4; ++v) {
    for (int e = 0; e < 4; ++e) {
      const auto hit = ClosestOnSegment(cb[v], ca[e], ca[(e + 1) % 4]);
      if (hit.distance < best) {
        best = hit.distance;
        out.on_a = hit.point;
        out.on_b = cb[v];
      }
    }
  }
  out.distance = best;

  // Parallel faces at the minimum distance: use the midpoint of the
  // overlapping interval.
  const double tie_tol = 1e-9 * std::max(1.0, best);
  for (int ea = 0; ea < 4; ++ea) {
    const Vec2 a0 = ca[ea];
    const Vec2 a1 = ca[(ea + 1) % 4];
    const Vec2 da = a1 - a0;
    const double len_a = da.norm();
    const Vec2 ua = da / len_a;
    for (int eb = 0; eb < 4; ++eb) {
      const Vec2 b0 = cb[eb];
      const Vec2 b1 = cb[(eb + 1) % 4];
      const Vec2 db = b1 - b0;
      const double len_b = db.norm();
      const double cross = ua.x() * db.y() - ua.y() * db.x();
      if (std::abs(cross) > 1e-9 * len_b) continue;
      const Vec2 normal(-ua.y(), ua.x());
      if (std::abs(std::abs((b0 - a0).dot(normal)) - best) > tie_tol) continue;
      const double t0 = (b0 - a0).dot(ua);
      const double t1 = (b1 - a0).dot(ua);
      const double lo = std::max(0.0, std::min(t0, t1));
      const double hi = std::min(len_a, std::max(t0, t1));
      if (hi - lo <= 1e-9 * len_a) continue;
      const Vec2 mid = a0 + 0.5 * (lo + hi) * ua;
      out.on_a = mid;
      out.on_b = mid + (b0 - a0).dot(normal) * normal;
      out.offset_a = out.on_a - center_a;
      return out;
    }
  }
  out.offset_a = out.on_a - center_a;
  return out;
}

}  // namespace apfmpc
