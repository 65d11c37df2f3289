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

// Kinematic bicycle model of a robot with an independently driven and steered
// wheel module at the front and at the rear.

#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "apfmpc/geometry.hpp"

namespace apfmpc {

inline constexpr int kStateDim = 5;
inline constexpr int kInputDim = 4;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using InputVector = Eigen::Matrix<double, kInputDim, 1>;

/// [X, Y, heading, front wheel speed, rear wheel speed].
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double v_front = 0.0;
  double v_rear = 0.0;

  StateVector vector() const {
    StateVector s;
    s << x, y, heading, v_front, v_rear;
    return s;
  }
  static RobotState FromVector(const StateVector& s) {
    return {s(0), s(1), NormalizeAngle(s(2)), s(3), s(4)};
  }
  Pose2D pose() const { return Pose2D(x, y, heading); }

  bool operator==(const RobotState&) const = default;
};

/// [front accel, rear accel, front steer, rear steer].
struct ControlInput {
  double accel_front = 0.0;
  double accel_rear = 0.0;
  double steer_front = 0.0;
  double steer_rear = 0.0;

  InputVector vector() const {
    InputVector u;
    u << accel_front, accel_rear, steer_front, steer_rear;
    return u;
  }
  static ControlInput FromVector(const InputVector& u) {
    return {u(0), u(1), u(2), u(3)};
  }

  bool operator==(const ControlInput&) const = default;
};

struct RobotGeometry {
  double l_front = 1.2;
  double l_rear = 1.2;
  /// Footprint half extents, centered at the C.G.
  double half_length = 1.3;
  double half_width = 0.5;

  double wheelbase() const { return l_front + l_rear; }
  OrientedRectangle Footprint(const Pose2D& pose) const {
    return OrientedRectangle(pose, half_length, half_width);
  }
};

inline void ValidateGeometry(const RobotGeometry& geom) {
  if (!(geom.l_front > 0.0) || !(geom.l_rear > 0.0)) {
    throw std::invalid_argument("RobotGeometry: wheel offsets must be positive");
  }
}

/// Side slip angle of the C.G. velocity in the body frame.
inline double side_slip(const ControlInput& input, const RobotGeometry& geom) {
  return std::atan((geom.l_rear * std::tan(input.steer_front) +
                    geom.l_front * std::tan(input.steer_rear)) /
                   geom.wheelbase());
}

/// Speed of the C.G.
inline double body_speed(const RobotState& state, const ControlInput& input,
                         double beta) {
  return (state.v_front * std::cos(input.steer_front) +
          state.v_rear * std::cos(input.steer_rear)) /
         (2.0 * std::cos(beta));
}

/// Continuous-time state rate f(state, input).
inline StateVector derivative(const RobotState& state, const ControlInput& input,
                              const RobotGeometry& geom) {
  const double beta = side_slip(input, geom);
  const double vc = body_speed(state, input, beta);
  StateVector rate;
  rate(0) = vc * std::cos(state.heading + beta);
  rate(1) = vc * std::sin(state.heading + beta);
  rate(2) = vc * std::cos(beta) *
            (std::tan(input.steer_front) - std::tan(input.steer_rear)) /
            geom.wheelbase();
  rate(3) = input.accel_front;
  rate(4) = input.accel_rear;
  return rate;
}

/// One forward-Euler step; the heading is renormalized.
inline RobotState euler_step(const RobotState& state, const ControlInput& input,
                             const RobotGeometry& geom, double dt) {
  const StateVector next = state.vector() + dt * derivative(state, input, geom);
  return RobotState::FromVector(next);
}

/// `substeps` Euler steps of length dt / substeps.
inline RobotState integrate(const RobotState& state, const ControlInput& input,
                            const RobotGeometry& geom, double dt, int substeps) {
  RobotState s = state;
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) s = euler_step(s, input, geom, h);
  return s;
}

/// |v_f cos(delta_f) - v_r cos(delta_r)|, the longitudinal mismatch between
/// the two wheel modules.
inline double slip_measure(double v_front, double v_rear, double steer_front,
                           double steer_rear) {
  return std::abs(v_front * std::cos(steer_front) -
                  v_rear * std::cos(steer_rear));
}

}  // namespace apfmpc
