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

// Closed-loop simulation: the controller runs at the control period against a
// non-slip kinematic plant and CVTR-moving obstacles.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "apfmpc/geometry.hpp"
#include "apfmpc/kinematics.hpp"
#include "apfmpc/mpc.hpp"
#include "apfmpc/prediction.hpp"

namespace apfmpc {

enum class ControllerVariant { kFull, kNoCustomization };

inline std::string ToString(ControllerVariant v) {
  return v == ControllerVariant::kFull ? "full" : "no_customization";
}

inline ControllerVariant ParseVariant(const std::string& s) {
  if (s == "full") return ControllerVariant::kFull;
  if (s == "no_customization") return ControllerVariant::kNoCustomization;
  throw std::invalid_argument("unknown controller variant '" + s + "'");
}

/// The controller without horizon prediction of robot and obstacle poses and
/// without the wheel speed difference rows.
inline MpcConfig ablation_variant(const MpcConfig& cfg) {
  MpcConfig out = cfg;
  out.predict_motion = false;
  out.slip_constraint = false;
  return out;
}

inline MpcConfig ConfigForVariant(const MpcConfig& cfg, ControllerVariant v) {
  return v == ControllerVariant::kFull ? cfg : ablation_variant(cfg);
}

struct Scenario {
  std::string name;
  std::string note;
  std::vector<OrientedRectangle> corridor;
  std::vector<Vec2> path;
  double ref_speed = 0.0;
  std::vector<Obstacle> obstacles;
  RobotState initial_state;
  double duration = 0.0;
  ControllerVariant variant = ControllerVariant::kFull;
};

inline void ValidateScenario(const Scenario& s) {
  if (!(s.duration > 0.0)) throw std::invalid_argument("duration_s must be > 0");
  if (s.path.size() < 2) {
    throw std::invalid_argument("path needs at least two points");
  }
  for (size_t i = 1; i < s.path.size(); ++i) {
    if (!((s.path[i] - s.path[i - 1]).norm() > 0.0)) {
      throw std::invalid_argument("path has repeated consecutive points");
    }
  }
  for (const Obstacle& o : s.obstacles) ValidateObstacle(o);
}

struct SimulationOptions {
  /// Plant Euler sub-steps per control period; 1 reproduces the controller's
  /// own discretization.
  int plant_substeps = 10;
};

enum class Outcome { kCompleted, kCollided, kSolverFailed };

inline std::string ToString(Outcome o) {
  switch (o) {
    case Outcome::kCompleted:
      return "completed";
    case Outcome::kCollided:
      return "collided";
    case Outcome::kSolverFailed:
      return "solver_failed";
  }
  return "unknown";
}

/// One control period: `state` is the plant state at time `t`, reached by
/// applying `input` over the preceding period.
struct SimulationRecord {
  double t = 0.0;
  RobotState state;
  ControlInput input;
  double slip_measure = 0.0;
  /// Closest distance to any obstacle or boundary.
  double min_clearance = 0.0;
  /// Closest distance to moving or static obstacles, boundaries excluded.
  double obstacle_clearance = 0.0;
  double objective = 0.0;
  ObjectiveTerms terms;
  int solver_iterations = 0;
  QpStatus solver_status = QpStatus::kOptimal;
  int fallback_level = 0;
  double reference_heading = 0.0;
  double lateral_error = 0.0;
  /// Wall time of the controller step; not part of any output file.
  double step_seconds = 0.0;
};

struct SimulationLog {
  std::string scenario_name;
  ControllerVariant variant = ControllerVariant::kFull;
  double dt = 0.1;
  RobotState initial_state;
  std::vector<SimulationRecord> records;
  /// Obstacle footprints at every record time, for plotting.
  std::vector<std::vector<OrientedRectangle>> obstacle_history;
  Outcome outcome = Outcome::kCompleted;
};

struct Clearances {
  double all = kInf;
  double obstacles = kInf;
};

inline Clearances ComputeClearances(const OrientedRectangle& robot,
                                    const std::vector<Obstacle>& obstacles,
                                    const std::vector<OrientedRectangle>& corridor) {
  Clearances c;
  for (const Obstacle& o : obstacles) {
    const double d = closest_pair(robot, o.footprint).distance;
    c.obstacles = std::min(c.obstacles, d);
  }
  c.all = c.obstacles;
  for (const OrientedRectangle& wall : corridor) {
    c.all = std::min(c.all, closest_pair(robot, wall).distance);
  }
  return c;
}

/// Runs `scenario` with the variant stored in the scenario.
inline SimulationLog run(const Scenario& scenario, const MpcConfig& cfg,
                         const RobotGeometry& geom,
                         const SimulationOptions& options = {}) {
  ValidateScenario(scenario);
  const MpcConfig variant_cfg = ConfigForVariant(cfg, scenario.variant);
  MpcController controller(variant_cfg, geom);
  const ReferencePath path(scenario.path);

  SimulationLog log;
  log.scenario_name = scenario.name;
  log.variant = scenario.variant;
  log.dt = cfg.dt;
  log.initial_state = scenario.initial_state;
  const int ticks = static_cast<int>(std::llround(scenario.duration / cfg.dt));
  log.records.reserve(ticks);

  RobotState state = scenario.initial_state;
  std::vector<Obstacle> obstacles = scenario.obstacles;
  std::vector<Obstacle> boundaries;
  for (const auto& wall : scenario.corridor) {
    boundaries.push_back(Obstacle::Boundary(wall));
  }

  for (int k = 0; k < ticks; ++k) {
    WorldSnapshot world;
    world.state = state;
    world.obstacles = obstacles;
    world.obstacles.insert(world.obstacles.end(), boundaries.begin(),
                           boundaries.end());
    world.reference = build_reference(path, state, scenario.ref_speed, variant_cfg);

    const auto start = std::chrono::steady_clock::now();
    MpcSolution sol;
    try {
      sol = controller.Step(world);
    } catch (const std::exception&) {
      log.outcome = Outcome::kSolverFailed;
      break;
    }
    const auto stop = std::chrono::steady_clock::now();
    if (!sol.applied_input.vector().allFinite()) {
      log.outcome = Outcome::kSolverFailed;
      break;
    }

    state = integrate(state, sol.applied_input, geom, cfg.dt,
                      options.plant_substeps);
    for (Obstacle& o : obstacles) o = AdvanceObstacle(o, cfg.dt);

    SimulationRecord rec;
    rec.t = (k + 1) * cfg.dt;
    rec.state = state;
    rec.input = sol.applied_input;
    rec.slip_measure = slip_measure(state.v_front, state.v_rear,
                                    sol.applied_input.steer_front,
                                    sol.applied_input.steer_rear);
    const Clearances clear =
        ComputeClearances(geom.Footprint(state.pose()), obstacles, scenario.corridor);
    rec.min_clearance = clear.all;
    rec.obstacle_clearance = clear.obstacles;
    rec.objective = sol.objective;
    rec.terms = sol.diagnostics.terms;
    rec.solver_iterations = sol.diagnostics.solver_iterations;
    rec.solver_status = sol.solver_status;
    rec.fallback_level = sol.diagnostics.fallback_level;
    rec.reference_heading = world.reference.eta_ref.front()(2);
    rec.lateral_error = path.Distance(state.pose().position());
    rec.step_seconds = std::chrono::duration<double>(stop - start).count();
    log.records.push_back(rec);

    std::vector<OrientedRectangle> snapshot;
    for (const Obstacle& o : obstacles) snapshot.push_back(o.footprint);
    log.obstacle_history.push_back(std::move(snapshot));

    if (clear.all == 0.0) {
      log.outcome = Outcome::kCollided;
      break;
    }
  }
  return log;
}

struct Metrics {
  double min_clearance = kInf;
  double min_obstacle_clearance = kInf;
  double max_slip_measure = 0.0;
  double rms_tracking_error = 0.0;
  double max_heading_rate = 0.0;
  double max_heading_change = 0.0;
  double final_lateral_error = 0.0;
  int max_fallback_level = 0;
  int ticks = 0;
  Outcome completion = Outcome::kCompleted;
};

inline Metrics metrics(const SimulationLog& log) {
  if (log.records.empty()) throw std::invalid_argument("metrics: empty log");
  Metrics m;
  m.completion = log.outcome;
  m.ticks = static_cast<int>(log.records.size());
  double sq_sum = 0.0;
  double prev_heading = log.initial_state.heading;
  for (const SimulationRecord& r : log.records) {
    m.min_clearance = std::min(m.min_clearance, r.min_clearance);
    m.min_obstacle_clearance =
        std::min(m.min_obstacle_clearance, r.obstacle_clearance);
    m.max_slip_measure = std::max(m.max_slip_measure, r.slip_measure);
    sq_sum += r.lateral_error * r.lateral_error;
    const double change = std::abs(NormalizeAngle(r.state.heading - prev_heading));
    m.max_heading_change = std::max(m.max_heading_change, change);
    prev_heading = r.state.heading;
    m.max_fallback_level = std::max(m.max_fallback_level, r.fallback_level);
  }
  m.max_heading_rate = m.max_heading_change / log.dt;
  m.rms_tracking_error = std::sqrt(sq_sum / log.records.size());
  m.final_lateral_error = log.records.back().lateral_error;
  return m;
}

}  // namespace apfmpc
