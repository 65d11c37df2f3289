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

// Linear MPC with potential-field obstacle costs. The decision vector stacks
// the input increments of the control horizon; they are held at zero over the
// remainder of the prediction horizon. Predicted outputs are condensed into
// affine functions of the decision vector through the augmented model.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "apfmpc/geometry.hpp"
#include "apfmpc/kinematics.hpp"
#include "apfmpc/linearization.hpp"
#include "apfmpc/potential_field.hpp"
#include "apfmpc/prediction.hpp"
#include "apfmpc/qp_solver.hpp"

namespace apfmpc {

/// Controller tuning. Defaults are the reference robot and MPC parameters.
struct MpcConfig {
  int n_pred = 20;
  int n_ctrl = 10;
  double dt = 0.1;
  StateVector q_weights = (StateVector() << 2, 2, 6, 10, 10).finished();
  InputVector r_weights = (InputVector() << 300, 300, 400, 400).finished();
  InputVector du_min =
      (InputVector() << -0.8, -0.8, -std::numbers::pi / 12, -std::numbers::pi / 12)
          .finished();
  InputVector du_max =
      (InputVector() << 0.8, 0.8, std::numbers::pi / 12, std::numbers::pi / 12)
          .finished();
  InputVector u_min =
      (InputVector() << -1, -1, -std::numbers::pi / 2, -std::numbers::pi / 2)
          .finished();
  InputVector u_max =
      (InputVector() << 1, 1, std::numbers::pi / 2, std::numbers::pi / 2)
          .finished();
  StateVector eta_min = (StateVector() << -kInf, -kInf, -kInf, 0.1, 0.1).finished();
  StateVector eta_max = (StateVector() << kInf, kInf, kInf, 1.4, 1.4).finished();
  double slip_band = 0.1;

  ApfParams obstacle_apf = ApfParams::Obstacle();
  ApfParams boundary_apf = ApfParams::Boundary();
  /// Obstacles farther than this (closest distance) contribute nothing.
  double activation_radius = 8.0;
  /// Steering commands stay this far inside +-pi/2, where tan is singular.
  double steer_margin = 1e-3;

  /// Horizon prediction of robot and obstacle poses for the potential terms.
  bool predict_motion = true;
  /// Linearized wheel speed difference rows.
  bool slip_constraint = true;
  /// Doublings of the slip band tried after an infeasible solve.
  int max_band_doublings = 4;

  QpLimits qp_limits;
};

inline void ValidateConfig(const MpcConfig& cfg) {
  if (cfg.n_ctrl < 1 || cfg.n_ctrl > cfg.n_pred) {
    throw std::invalid_argument("MpcConfig: need 1 <= n_ctrl <= n_pred");
  }
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("MpcConfig: dt must be > 0");
  if ((cfg.du_min.array() > cfg.du_max.array()).any() ||
      (cfg.u_min.array() > cfg.u_max.array()).any() ||
      (cfg.eta_min.array() > cfg.eta_max.array()).any()) {
    throw std::invalid_argument("MpcConfig: lower bound above upper bound");
  }
  if (!(cfg.slip_band > 0.0)) {
    throw std::invalid_argument("MpcConfig: slip_band must be > 0");
  }
  ValidateApfParams(cfg.obstacle_apf);
  ValidateApfParams(cfg.boundary_apf);
}

/// Effective input bounds, with steering kept strictly inside +-pi/2.
inline std::pair<InputVector, InputVector> InputBounds(const MpcConfig& cfg) {
  InputVector lo = cfg.u_min;
  InputVector hi = cfg.u_max;
  const double steer_limit = std::numbers::pi / 2 - cfg.steer_margin;
  for (int c = 2; c < 4; ++c) {
    lo(c) = std::max(lo(c), -steer_limit);
    hi(c) = std::min(hi(c), steer_limit);
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Reference

/// Polyline the robot should follow. Headings are those of the segments.
class ReferencePath {
 public:
  explicit ReferencePath(std::vector<Vec2> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("ReferencePath: empty");
    arc_.assign(points_.size(), 0.0);
    for (size_t i = 1; i < points_.size(); ++i) {
      const double len = (points_[i] - points_[i - 1]).norm();
      if (!(len > 0.0)) {
        throw std::invalid_argument("ReferencePath: repeated point");
      }
      arc_[i] = arc_[i - 1] + len;
    }
  }

  const std::vector<Vec2>& points() const { return points_; }
  double length() const { return arc_.back(); }
  int num_segments() const { return static_cast<int>(points_.size()) - 1; }

  double SegmentHeading(int seg) const {
    if (num_segments() == 0) return 0.0;
    seg = std::clamp(seg, 0, num_segments() - 1);
    const Vec2 d = points_[seg + 1] - points_[seg];
    return std::atan2(d.y(), d.x());
  }

  /// Arc length of the orthogonal projection of `p` (closest point, earliest
  /// on ties).
  double Project(const Vec2& p) const {
    if (num_segments() == 0) return 0.0;
    double best_dist = kInf;
    double best_s = 0.0;
    for (int s = 0; s < num_segments(); ++s) {
      const Vec2 a = points_[s];
      const Vec2 d = points_[s + 1] - a;
      const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      const double dist = (p - (a + t * d)).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best_s = arc_[s] + t * (arc_[s + 1] - arc_[s]);
      }
    }
    return best_s;
  }

  /// Distance from `p` to the polyline.
  double Distance(const Vec2& p) const {
    if (num_segments() == 0) return (p - points_[0]).norm();
    double best = kInf;
    for (int s = 0; s < num_segments(); ++s) {
      const Vec2 a = points_[s];
      const Vec2 d = points_[s + 1] - a;
      const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (p - (a + t * d)).norm());
    }
    return best;
  }

  struct Sample {
    Vec2 point;
    double heading;
  };

  Sample At(double s) const {
    if (num_segments() == 0) return {points_[0], 0.0};
    s = std::clamp(s, 0.0, length());
    const auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
    int seg = static_cast<int>(it - arc_.begin()) - 1;
    seg = std::clamp(seg, 0, num_segments() - 1);
    const double t = (s - arc_[seg]) / (arc_[seg + 1] - arc_[seg]);
    return {points_[seg] + t * (points_[seg + 1] - points_[seg]),
            SegmentHeading(seg)};
  }

 private:
  std::vector<Vec2> points_;
  std::vector<double> arc_;
};

/// Reference outputs for steps 1..N_p.
struct ReferenceHorizon {
  std::vector<StateVector> eta_ref;

  int size() const { return static_cast<int>(eta_ref.size()); }
};

inline ReferenceHorizon build_reference(const ReferencePath& path,
                                        const RobotState& state,
                                        double ref_speed,
                                        const MpcConfig& cfg) {
  ReferenceHorizon ref;
  ref.eta_ref.reserve(cfg.n_pred);
  const double s0 = path.Project({state.x, state.y});
  double prev_heading = state.heading;
  for (int i = 0; i < cfg.n_pred; ++i) {
    const double s = s0 + ref_speed * cfg.dt * (i + 1);
    const bool past_end = s > path.length();
    const auto sample = path.At(s);
    const double heading = UnwrapNear(sample.heading, prev_heading);
    prev_heading = heading;
    const double speed = past_end ? 0.0 : ref_speed;
    StateVector eta;
    eta << sample.point.x(), sample.point.y(), heading, speed, speed;
    ref.eta_ref.push_back(eta);
  }
  return ref;
}

// ---------------------------------------------------------------------------
// Wheel speed difference

/// Linearization h(u0 + du) ~= e.du + g of
/// h = v_f cos(d_f) - v_r cos(d_r), evaluated with one-step-ahead speeds.
struct SlipRow {
  InputVector e;
  double g = 0.0;
};

inline SlipRow slip_linearization(const RobotState& state0,
                                  const ControlInput& input0, double dt) {
  const double vf = state0.v_front + dt * input0.accel_front;
  const double vr = state0.v_rear + dt * input0.accel_rear;
  SlipRow row;
  row.g = vf * std::cos(input0.steer_front) - vr * std::cos(input0.steer_rear);
  row.e << dt * std::cos(input0.steer_front), -dt * std::cos(input0.steer_rear),
      -vf * std::sin(input0.steer_front), vr * std::sin(input0.steer_rear);
  return row;
}

/// Exact h at u0 + du with the same one-step-ahead speed convention.
inline double SlipFunction(const RobotState& state0, const ControlInput& input0,
                           const InputVector& du, double dt) {
  const InputVector u = input0.vector() + du;
  const double vf = state0.v_front + dt * u(0);
  const double vr = state0.v_rear + dt * u(1);
  return vf * std::cos(u(2)) - vr * std::cos(u(3));
}

/// One row per control step j over the decision vector:
///   -band <= e . (du_0 + ... + du_j) + g <= band.
struct SlipConstraintRows {
  MatrixXd a_mat;
  VectorXd lower;
  VectorXd upper;
  SlipRow row;
};

inline SlipConstraintRows slip_constraint_rows(const RobotState& state0,
                                               const ControlInput& input0,
                                               const MpcConfig& cfg,
                                               double band) {
  SlipConstraintRows out;
  out.row = slip_linearization(state0, input0, cfg.dt);
  const int nz = kInputDim * cfg.n_ctrl;
  out.a_mat = MatrixXd::Zero(cfg.n_ctrl, nz);
  out.lower = VectorXd::Constant(cfg.n_ctrl, -band - out.row.g);
  out.upper = VectorXd::Constant(cfg.n_ctrl, band - out.row.g);
  for (int j = 0; j < cfg.n_ctrl; ++j) {
    for (int l = 0; l <= j; ++l) {
      out.a_mat.block(j, kInputDim * l, 1, kInputDim) = out.row.e.transpose();
    }
  }
  return out;
}

inline SlipConstraintRows slip_constraint_rows(const RobotState& state0,
                                               const ControlInput& input0,
                                               const MpcConfig& cfg) {
  return slip_constraint_rows(state0, input0, cfg, cfg.slip_band);
}

// ---------------------------------------------------------------------------
// Assembly

/// Potential term active at one prediction step.
struct ApfTerm {
  int step = 0;
  int obstacle = 0;
  ObstacleKind kind = ObstacleKind::kObstacle;
  Pose2D robot_anchor;
  Pose2D obstacle_anchor;
  ClosestPair pair;
  QuadraticApproximation quad;
};

/// The condensed program plus everything needed to interpret its solution.
struct AssembledQp {
  QpProblem qp;
  /// Constant part of the objective, so that
  /// J(z) = qp.Objective(z) + constant.
  double constant = 0.0;
  /// Stacked outputs: eta = free_response + prediction_matrix * z, with
  /// rows [5 i, 5 i + 5) for step i + 1.
  VectorXd free_response;
  MatrixXd prediction_matrix;
  ReferenceHorizon reference;
  std::vector<ApfTerm> apf_terms;
  SlipRow slip;
  int slip_row_offset = -1;
  int slip_row_count = 0;

  VectorXd PredictedOutputs(const VectorXd& z) const {
    return free_response + prediction_matrix * z;
  }
};

/// Costs of the three objective terms at decision vector z.
struct ObjectiveTerms {
  double apf = 0.0;
  double tracking = 0.0;
  double effort = 0.0;

  double total() const { return apf + tracking + effort; }
};

inline ObjectiveTerms EvaluateTerms(const AssembledQp& asm_qp,
                                    const MpcConfig& cfg, const VectorXd& z) {
  ObjectiveTerms terms;
  const VectorXd eta = asm_qp.PredictedOutputs(z);
  for (int i = 0; i < cfg.n_pred; ++i) {
    const StateVector err =
        eta.segment<kStateDim>(kStateDim * i) - asm_qp.reference.eta_ref[i];
    terms.tracking += err.dot(cfg.q_weights.cwiseProduct(err));
  }
  for (const ApfTerm& t : asm_qp.apf_terms) {
    terms.apf += t.quad.Evaluate(eta.segment<2>(kStateDim * t.step));
  }
  for (int j = 0; j < cfg.n_ctrl; ++j) {
    const InputVector du = z.segment<kInputDim>(kInputDim * j);
    terms.effort += du.dot(cfg.r_weights.cwiseProduct(du));
  }
  return terms;
}

/// Builds the QP for one control tick. `robot_track` and `obstacle_tracks`
/// supply the anchors of the potential expansions, one pose per prediction
/// step.
inline AssembledQp AssembleWithTracks(
    const RobotState& state, const ControlInput& prev_input,
    const ReferenceHorizon& ref, const std::vector<Obstacle>& obstacles,
    const std::vector<PredictionTrack>& obstacle_tracks,
    const PredictionTrack& robot_track, const RobotGeometry& geom,
    const MpcConfig& cfg, std::optional<double> slip_band) {
  const int np = cfg.n_pred;
  const int nc = cfg.n_ctrl;
  const int nz = kInputDim * nc;
  if (ref.size() != np || robot_track.size() != np) {
    throw std::invalid_argument("assemble: horizon length mismatch");
  }

  const LinearizedModel lin = linearize(state, prev_input, geom, cfg.dt);
  const AugmentedModel aug = augment(lin, prev_input);

  AssembledQp out;
  out.reference = ref;
  out.free_response.resize(kStateDim * np);
  out.prediction_matrix = MatrixXd::Zero(kStateDim * np, nz);

  MatrixXd sens = MatrixXd::Zero(kAugmentedDim, nz);
  Eigen::Matrix<double, kAugmentedDim, 1> free = AugmentedState(state, prev_input);
  for (int i = 0; i < np; ++i) {
    free = aug.a_bar * free + aug.d_bar;
    sens = aug.a_bar * sens;
    if (i < nc) sens.middleCols(kInputDim * i, kInputDim) += aug.b_bar;
    out.free_response.segment<kStateDim>(kStateDim * i) = aug.c_bar * free;
    out.prediction_matrix.middleRows(kStateDim * i, kStateDim) = aug.c_bar * sens;
  }

  QpProblem& qp = out.qp;
  qp.h_mat = MatrixXd::Zero(nz, nz);
  qp.f_vec = VectorXd::Zero(nz);

  // Tracking.
  for (int i = 0; i < np; ++i) {
    const auto g = out.prediction_matrix.middleRows(kStateDim * i, kStateDim);
    const StateVector err =
        out.free_response.segment<kStateDim>(kStateDim * i) - ref.eta_ref[i];
    const auto q = cfg.q_weights.asDiagonal();
    qp.h_mat.noalias() += 2.0 * g.transpose() * q * g;
    qp.f_vec.noalias() += 2.0 * g.transpose() * (q * err);
    out.constant += err.dot(cfg.q_weights.cwiseProduct(err));
  }

  // Control effort.
  for (int j = 0; j < nc; ++j) {
    qp.h_mat.diagonal().segment<kInputDim>(kInputDim * j) += 2.0 * cfg.r_weights;
  }

  // Potential field terms on the predicted positions.
  for (int i = 0; i < np; ++i) {
    const Pose2D& robot_pose = robot_track.poses[i];
    const OrientedRectangle robot_fp = geom.Footprint(robot_pose);
    const auto gp = out.prediction_matrix.middleRows(kStateDim * i, 2);
    const Vec2 free_pos = out.free_response.segment<2>(kStateDim * i);
    for (size_t o = 0; o < obstacles.size(); ++o) {
      const Obstacle& obs = obstacles[o];
      const Pose2D& obs_pose = obstacle_tracks[o].poses[i];
      const ClosestPair pair =
          closest_pair(robot_fp, obs.footprint.WithPose(obs_pose));
      if (pair.distance > cfg.activation_radius) continue;
      const ApfParams& params = obs.kind == ObstacleKind::kBoundary
                                    ? cfg.boundary_apf
                                    : cfg.obstacle_apf;
      ApfTerm term;
      term.step = i;
      term.obstacle = static_cast<int>(o);
      term.kind = obs.kind;
      term.robot_anchor = robot_pose;
      term.obstacle_anchor = obs_pose;
      term.pair = pair;
      term.quad = quadratic_approx(robot_pose.position(), pair.offset_a,
                                   pair.on_b, params);
      const Vec2 e = free_pos - term.quad.anchor;
      const Vec2 lin_coeff = term.quad.gradient + term.quad.hessian_psd * e;
      qp.h_mat.noalias() += gp.transpose() * term.quad.hessian_psd * gp;
      qp.f_vec.noalias() += gp.transpose() * lin_coeff;
      out.constant += term.quad.constant + term.quad.gradient.dot(e) +
                      0.5 * e.dot(term.quad.hessian_psd * e);
      out.apf_terms.push_back(term);
    }
  }
  qp.h_mat = 0.5 * (qp.h_mat + qp.h_mat.transpose());

  // Input increment bounds on the decision vector.
  qp.z_lower.resize(nz);
  qp.z_upper.resize(nz);
  for (int j = 0; j < nc; ++j) {
    qp.z_lower.segment<kInputDim>(kInputDim * j) = cfg.du_min;
    qp.z_upper.segment<kInputDim>(kInputDim * j) = cfg.du_max;
  }

  // Rows: cumulative input bounds, finite output bounds, slip band.
  const auto [u_lo, u_hi] = InputBounds(cfg);
  const InputVector u0 = prev_input.vector();
  std::vector<std::pair<int, int>> output_rows;
  for (int i = 0; i < np; ++i) {
    for (int c = 0; c < kStateDim; ++c) {
      if (std::isfinite(cfg.eta_min(c)) || std::isfinite(cfg.eta_max(c))) {
        output_rows.emplace_back(i, c);
      }
    }
  }
  std::optional<SlipConstraintRows> slip;
  if (slip_band) slip = slip_constraint_rows(state, prev_input, cfg, *slip_band);
  const int n_input_rows = kInputDim * nc;
  const int n_output_rows = static_cast<int>(output_rows.size());
  const int n_slip_rows = slip ? nc : 0;
  const int m = n_input_rows + n_output_rows + n_slip_rows;
  qp.a_mat = MatrixXd::Zero(m, nz);
  qp.lower.resize(m);
  qp.upper.resize(m);
  int row = 0;
  for (int j = 0; j < nc; ++j) {
    for (int c = 0; c < kInputDim; ++c, ++row) {
      for (int l = 0; l <= j; ++l) qp.a_mat(row, kInputDim * l + c) = 1.0;
      qp.lower(row) = u_lo(c) - u0(c);
      qp.upper(row) = u_hi(c) - u0(c);
    }
  }
  for (const auto& [i, c] : output_rows) {
    const int r = kStateDim * i + c;
    qp.a_mat.row(row) = out.prediction_matrix.row(r);
    qp.lower(row) = cfg.eta_min(c) - out.free_response(r);
    qp.upper(row) = cfg.eta_max(c) - out.free_response(r);
    ++row;
  }
  if (slip) {
    out.slip = slip->row;
    out.slip_row_offset = row;
    out.slip_row_count = n_slip_rows;
    qp.a_mat.middleRows(row, n_slip_rows) = slip->a_mat;
    qp.lower.segment(row, n_slip_rows) = slip->lower;
    qp.upper.segment(row, n_slip_rows) = slip->upper;
  }
  return out;
}

/// Anchors from held-input robot prediction and CVTR obstacle prediction, or
/// frozen at the current poses when `cfg.predict_motion` is off.
inline std::pair<PredictionTrack, std::vector<PredictionTrack>> AnchorTracks(
    const RobotState& state, const ControlInput& prev_input,
    const std::vector<Obstacle>& obstacles, const RobotGeometry& geom,
    const MpcConfig& cfg) {
  std::pair<PredictionTrack, std::vector<PredictionTrack>> out;
  if (cfg.predict_motion) {
    out.first = predict_robot(state, prev_input, geom, cfg.n_pred, cfg.dt);
  } else {
    out.first = FrozenTrack(state.pose(), cfg.n_pred, cfg.dt);
  }
  out.second.reserve(obstacles.size());
  for (const Obstacle& obs : obstacles) {
    out.second.push_back(
        cfg.predict_motion
            ? predict_obstacle(obs, cfg.n_pred, cfg.dt)
            : FrozenTrack(obs.footprint.center(), cfg.n_pred, cfg.dt));
  }
  return out;
}

inline AssembledQp assemble(const RobotState& state,
                            const ControlInput& prev_input,
                            const ReferenceHorizon& ref,
                            const std::vector<Obstacle>& obstacles,
                            const RobotGeometry& geom, const MpcConfig& cfg) {
  const auto [robot_track, obstacle_tracks] =
      AnchorTracks(state, prev_input, obstacles, geom, cfg);
  std::optional<double> band;
  if (cfg.slip_constraint) band = cfg.slip_band;
  return AssembleWithTracks(state, prev_input, ref, obstacles, obstacle_tracks,
                            robot_track, geom, cfg, band);
}

// ---------------------------------------------------------------------------
// Controller

struct WorldSnapshot {
  RobotState state;
  std::vector<Obstacle> obstacles;
  ReferenceHorizon reference;
};

struct MpcDiagnostics {
  ObjectiveTerms terms;
  int solver_iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  /// 0: nominal; 1..k: slip band doubled k times; -1: zero increment held.
  int fallback_level = 0;
  double slip_band_used = 0.0;
  int num_apf_terms = 0;
};

struct MpcSolution {
  ControlInput applied_input;
  /// Row j holds the increment of control step j.
  Eigen::Matrix<double, Eigen::Dynamic, kInputDim> delta_sequence;
  /// Row i holds the predicted output of step i + 1.
  Eigen::Matrix<double, Eigen::Dynamic, kStateDim> predicted_outputs;
  double objective = 0.0;
  QpStatus solver_status = QpStatus::kOptimal;
  MpcDiagnostics diagnostics;
};

/// Receding-horizon controller. Holds the previously applied input and the
/// warm start, so one instance serves one closed loop.
class MpcController {
 public:
  MpcController(const MpcConfig& cfg, const RobotGeometry& geom,
                const ControlInput& initial_input = {})
      : cfg_(cfg), geom_(geom), prev_input_(initial_input) {
    ValidateConfig(cfg_);
    ValidateGeometry(geom_);
  }

  const MpcConfig& config() const { return cfg_; }
  const ControlInput& previous_input() const { return prev_input_; }

  MpcSolution Step(const WorldSnapshot& world) {
    const int nz = kInputDim * cfg_.n_ctrl;
    const auto [robot_track, obstacle_tracks] =
        AnchorTracks(world.state, prev_input_, world.obstacles, geom_, cfg_);

    std::optional<VectorXd> warm;
    if (warm_.size() == nz) {
      VectorXd shifted = VectorXd::Zero(nz);
      shifted.head(nz - kInputDim) = warm_.tail(nz - kInputDim);
      warm = shifted;
    }

    MpcSolution sol;
    VectorXd z = VectorXd::Zero(nz);
    std::optional<AssembledQp> problem;
    QpSolution qp_sol;
    double band = cfg_.slip_band;
    const int attempts = cfg_.slip_constraint ? cfg_.max_band_doublings + 1 : 1;
    bool solved = false;
    for (int attempt = 0; attempt < attempts; ++attempt) {
      std::optional<double> band_opt;
      if (cfg_.slip_constraint) band_opt = band;
      problem = AssembleWithTracks(world.state, prev_input_, world.reference,
                                   world.obstacles, obstacle_tracks,
                                   robot_track, geom_, cfg_, band_opt);
      qp_sol = solver_.Solve(problem->qp, warm, cfg_.qp_limits);
      sol.diagnostics.solver_iterations += qp_sol.iterations;
      if (qp_sol.status != QpStatus::kInfeasible) {
        z = qp_sol.z;
        sol.diagnostics.fallback_level = attempt;
        sol.diagnostics.slip_band_used = cfg_.slip_constraint ? band : 0.0;
        solved = true;
        break;
      }
      band *= 2.0;
    }
    if (!solved) {
      sol.diagnostics.fallback_level = -1;
      sol.diagnostics.slip_band_used = band / 2.0;
    }
    sol.solver_status = qp_sol.status;
    sol.diagnostics.primal_residual = qp_sol.primal_residual;
    sol.diagnostics.dual_residual = qp_sol.dual_residual;

    // Clamp the increments into their bounds, then the input into its bounds.
    for (int j = 0; j < cfg_.n_ctrl; ++j) {
      z.segment<kInputDim>(kInputDim * j) =
          z.segment<kInputDim>(kInputDim * j)
              .cwiseMax(cfg_.du_min)
              .cwiseMin(cfg_.du_max);
    }
    const auto [u_lo, u_hi] = InputBounds(cfg_);
    const InputVector applied =
        (prev_input_.vector() + z.head<kInputDim>()).cwiseMax(u_lo).cwiseMin(u_hi);

    sol.applied_input = ControlInput::FromVector(applied);
    sol.delta_sequence.resize(cfg_.n_ctrl, kInputDim);
    for (int j = 0; j < cfg_.n_ctrl; ++j) {
      sol.delta_sequence.row(j) = z.segment<kInputDim>(kInputDim * j).transpose();
    }
    const VectorXd eta = problem->PredictedOutputs(z);
    sol.predicted_outputs.resize(cfg_.n_pred, kStateDim);
    for (int i = 0; i < cfg_.n_pred; ++i) {
      sol.predicted_outputs.row(i) =
          eta.segment<kStateDim>(kStateDim * i).transpose();
    }
    sol.diagnostics.terms = EvaluateTerms(*problem, cfg_, z);
    sol.diagnostics.num_apf_terms = static_cast<int>(problem->apf_terms.size());
    sol.objective = problem->qp.Objective(z) + problem->constant;

    warm_ = z;
    prev_input_ = sol.applied_input;
    last_problem_ = std::move(problem);
    return sol;
  }

  /// The program solved by the most recent Step.
  const std::optional<AssembledQp>& last_problem() const {
    return last_problem_;
  }

 private:
  MpcConfig cfg_;
  RobotGeometry geom_;
  ControlInput prev_input_;
  VectorXd warm_;
  QpSolver solver_;
  std::optional<AssembledQp> last_problem_;
};

}  // namespace apfmpc
