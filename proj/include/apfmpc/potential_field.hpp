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

// Repulsive potential a / (d^2)^b between the closest points of the robot and
// an obstacle, and its convex quadratic model in the robot C.G. position.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "apfmpc/geometry.hpp"

namespace apfmpc {

using Mat2 = Eigen::Matrix2d;

struct ApfParams {
  double scale_a = 3.0;
  double exponent_b = 1.8;
  double min_sq_distance = 1e-4;

  static ApfParams Obstacle() { return {3.0, 1.8, 1e-4}; }
  static ApfParams Boundary() { return {0.3, 1.1, 1e-4}; }
};

inline void ValidateApfParams(const ApfParams& p) {
  if (!(p.scale_a > 0.0) || !(p.exponent_b > 0.0) ||
      !(p.min_sq_distance > 0.0)) {
    throw std::invalid_argument("ApfParams: all parameters must be positive");
  }
}

/// Second-order model
///   value(P) ~= constant + gradient.(P - anchor)
///               + 0.5 (P - anchor)' hessian_psd (P - anchor).
struct QuadraticApproximation {
  double constant = 0.0;
  Vec2 gradient = Vec2::Zero();
  Mat2 hessian_psd = Mat2::Zero();
  Vec2 anchor = Vec2::Zero();

  double Evaluate(const Vec2& position) const {
    const Vec2 e = position - anchor;
    return constant + gradient.dot(e) + 0.5 * e.dot(hessian_psd * e);
  }
};

inline double apf_value_sq(double sq_distance, const ApfParams& params) {
  return params.scale_a /
         std::pow(std::max(sq_distance, params.min_sq_distance),
                  params.exponent_b);
}

inline double apf_value(const ClosestPair& pair, const ApfParams& params) {
  return apf_value_sq(pair.distance * pair.distance, params);
}

/// Nearest symmetric positive semidefinite matrix in Frobenius norm: negative
/// eigenvalues are clamped to zero.
inline Mat2 psd_project(const Mat2& h) {
  const double asym = std::abs(h(0, 1) - h(1, 0));
  if (!(asym <= 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff()))) {
    throw std::invalid_argument("psd_project: matrix is not symmetric");
  }
  const double p = h(0, 0);
  const double r = h(1, 1);
  const double q = 0.5 * (h(0, 1) + h(1, 0));
  if (q == 0.0) {
    Mat2 out = Mat2::Zero();
    out(0, 0) = std::max(p, 0.0);
    out(1, 1) = std::max(r, 0.0);
    return out;
  }
  const double mean = 0.5 * (p + r);
  const double radius = std::hypot(0.5 * (p - r), q);
  const double lambda_hi = mean + radius;
  const double lambda_lo = mean - radius;
  if (lambda_lo >= 0.0) return Mat2{{p, q}, {q, r}};
  if (lambda_hi <= 0.0) return Mat2::Zero();
  // Eigenvector of lambda_hi, taken from whichever row is better conditioned.
  Vec2 v = (p >= r) ? Vec2(lambda_hi - r, q) : Vec2(q, lambda_hi - p);
  v.normalize();
  return lambda_hi * (v * v.transpose());
}

/// Taylor model of the potential with the closest-point offset on the robot
/// and the obstacle point both held fixed, evaluated at robot position
/// `robot_pos`.
inline QuadraticApproximation quadratic_approx(const Vec2& robot_pos,
                                               const Vec2& offset,
                                               const Vec2& obstacle_point,
                                               const ApfParams& params) {
  const double a = params.scale_a;
  const double b = params.exponent_b;
  const Vec2 diff = robot_pos + offset - obstacle_point;
  const double sq = diff.squaredNorm();

  QuadraticApproximation out;
  out.anchor = robot_pos;
  out.constant = apf_value_sq(sq, params);
  if (sq < params.min_sq_distance) {
    // Inside the clamp the potential is flat.
    return out;
  }
  const double base = std::pow(sq, -b - 1.0);
  out.gradient = -2.0 * a * b * base * diff;
  const Mat2 hessian =
      -2.0 * a * b * base *
      (Mat2::Identity() - (2.0 * (b + 1.0) / sq) * diff * diff.transpose());
  out.hessian_psd = psd_project(0.5 * (hessian + hessian.transpose()));
  return out;
}

}  // namespace apfmpc
