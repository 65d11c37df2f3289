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

#include <cmath>
#include <stdexcept>
#include <vector>

#include "apfmpc/geometry.hpp"
#include "apfmpc/kinematics.hpp"

namespace apfmpc {

enum class ObstacleKind { kObstacle, kBoundary };

struct Obstacle {
  OrientedRectangle footprint;
  Vec2 velocity = Vec2::Zero();
  double yaw_rate = 0.0;
  ObstacleKind kind = ObstacleKind::kObstacle;

  static Obstacle Boundary(const OrientedRectangle& rect) {
    return {rect, Vec2::Zero(), 0.0, ObstacleKind::kBoundary};
  }
};

inline void ValidateObstacle(const Obstacle& obs) {
  if (obs.kind == ObstacleKind::kBoundary &&
      (obs.velocity != Vec2::Zero() || obs.yaw_rate != 0.0)) {
    throw std::invalid_argument("Obstacle: boundaries must be stationary");
  }
}

/// Poses for steps 1..N of a horizon with period dt; poses[0] is one step
/// ahead of the current time.
struct PredictionTrack {
  std::vector<Pose2D> poses;
  double dt = 0.0;

  int size() const { return static_cast<int>(poses.size()); }
};

/// Robot poses under the nonlinear model with `held_input` applied throughout.
inline PredictionTrack predict_robot(const RobotState& state,
                                     const ControlInput& held_input,
                                     const RobotGeometry& geom, int n_steps,
                                     double dt) {
  if (n_steps < 1) throw std::invalid_argument("predict_robot: n_steps < 1");
  PredictionTrack track;
  track.dt = dt;
  track.poses.reserve(n_steps);
  RobotState s = state;
  for (int i = 0; i < n_steps; ++i) {
    s = euler_step(s, held_input, geom, dt);
    track.poses.push_back(s.pose());
  }
  return track;
}

/// Advances an obstacle by one step under constant speed and turning rate:
/// the velocity is rotated by dt * yaw_rate, then the center is translated.
inline Obstacle AdvanceObstacle(const Obstacle& obs, double dt) {
  if (obs.velocity.isZero(0.0) && obs.yaw_rate == 0.0) return obs;
  const double turn = dt * obs.yaw_rate;
  Vec2 velocity = obs.velocity;
  if (turn != 0.0) {
    const double c = std::cos(turn);
    const double s = std::sin(turn);
    velocity = Vec2(c * obs.velocity.x() - s * obs.velocity.y(),
                    s * obs.velocity.x() + c * obs.velocity.y());
  }
  const Pose2D& p = obs.footprint.center();
  const Pose2D next(p.x + dt * velocity.x(), p.y + dt * velocity.y(),
                    p.heading + turn);
  return {obs.footprint.WithPose(next), velocity, obs.yaw_rate, obs.kind};
}

inline PredictionTrack predict_obstacle(const Obstacle& obs, int n_steps,
                                        double dt) {
  if (n_steps < 1) throw std::invalid_argument("predict_obstacle: n_steps < 1");
  PredictionTrack track;
  track.dt = dt;
  track.poses.reserve(n_steps);
  Obstacle o = obs;
  for (int i = 0; i < n_steps; ++i) {
    o = AdvanceObstacle(o, dt);
    track.poses.push_back(o.footprint.center());
  }
  return track;
}

/// A track that repeats `pose` for every step.
inline PredictionTrack FrozenTrack(const Pose2D& pose, int n_steps, double dt) {
  PredictionTrack track;
  track.dt = dt;
  track.poses.assign(n_steps, pose);
  return track;
}

}  // namespace apfmpc
