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

#include <Eigen/Core>

#include "apfmpc/kinematics.hpp"

namespace apfmpc {

inline constexpr int kAugmentedDim = kStateDim + kInputDim;

/// Affine discrete model x(k+1) = A x(k) + B u(k) + d about an operating point.
struct LinearizedModel {
  Eigen::Matrix<double, kStateDim, kStateDim> a_mat;
  Eigen::Matrix<double, kStateDim, kInputDim> b_mat;
  Eigen::Matrix<double, kStateDim, kStateDim> c_mat;
  StateVector d_vec;
  double dt = 0.0;
};

/// The same model with the previous input appended to the state and the input
/// increment as the decision variable.
struct AugmentedModel {
  Eigen::Matrix<double, kAugmentedDim, kAugmentedDim> a_bar;
  Eigen::Matrix<double, kAugmentedDim, kInputDim> b_bar;
  Eigen::Matrix<double, kAugmentedDim, 1> d_bar;
  Eigen::Matrix<double, kStateDim, kAugmentedDim> c_bar;
  int n_state = kStateDim;
  int n_input = kInputDim;
};

/// Closed-form partial derivatives of the continuous rate.
///
/// Uses vc*cos(beta) = (v_f cos d_f + v_r cos d_r) / 2 and
/// tan(beta) = (l_r tan d_f + l_f tan d_r) / L, which give
///   Xdot = S (cos th - T sin th), Ydot = S (sin th + T cos th),
///   thdot = S (tan d_f - tan d_r) / L.
inline void RateJacobians(const RobotState& s, const ControlInput& u,
                          const RobotGeometry& geom,
                          Eigen::Matrix<double, kStateDim, kStateDim>* dfdx,
                          Eigen::Matrix<double, kStateDim, kInputDim>* dfdu) {
  const double wb = geom.wheelbase();
  const double cf = std::cos(u.steer_front);
  const double cr = std::cos(u.steer_rear);
  const double sf = std::sin(u.steer_front);
  const double sr = std::sin(u.steer_rear);
  const double tf = std::tan(u.steer_front);
  const double tr = std::tan(u.steer_rear);
  const double sec2f = 1.0 / (cf * cf);
  const double sec2r = 1.0 / (cr * cr);
  const double ct = std::cos(s.heading);
  const double st = std::sin(s.heading);

  const double speed = 0.5 * (s.v_front * cf + s.v_rear * cr);
  const double slip_tan = (geom.l_rear * tf + geom.l_front * tr) / wb;
  const double diff_tan = tf - tr;
  const double gx = ct - slip_tan * st;
  const double gy = st + slip_tan * ct;

  const double dspeed_dvf = 0.5 * cf;
  const double dspeed_dvr = 0.5 * cr;
  const double dspeed_ddf = -0.5 * s.v_front * sf;
  const double dspeed_ddr = -0.5 * s.v_rear * sr;
  const double dtan_ddf = geom.l_rear * sec2f / wb;
  const double dtan_ddr = geom.l_front * sec2r / wb;

  dfdx->setZero();
  (*dfdx)(0, 2) = -speed * gy;
  (*dfdx)(0, 3) = dspeed_dvf * gx;
  (*dfdx)(0, 4) = dspeed_dvr * gx;
  (*dfdx)(1, 2) = speed * gx;
  (*dfdx)(1, 3) = dspeed_dvf * gy;
  (*dfdx)(1, 4) = dspeed_dvr * gy;
  (*dfdx)(2, 3) = dspeed_dvf * diff_tan / wb;
  (*dfdx)(2, 4) = dspeed_dvr * diff_tan / wb;

  dfdu->setZero();
  (*dfdu)(0, 2) = dspeed_ddf * gx - speed * st * dtan_ddf;
  (*dfdu)(0, 3) = dspeed_ddr * gx - speed * st * dtan_ddr;
  (*dfdu)(1, 2) = dspeed_ddf * gy + speed * ct * dtan_ddf;
  (*dfdu)(1, 3) = dspeed_ddr * gy + speed * ct * dtan_ddr;
  (*dfdu)(2, 2) = (dspeed_ddf * diff_tan + speed * sec2f) / wb;
  (*dfdu)(2, 3) = (dspeed_ddr * diff_tan - speed * sec2r) / wb;
  (*dfdu)(3, 0) = 1.0;
  (*dfdu)(4, 1) = 1.0;
}

inline LinearizedModel linearize(const RobotState& state0,
                                 const ControlInput& input0,
                                 const RobotGeometry& geom, double dt) {
  Eigen::Matrix<double, kStateDim, kStateDim> dfdx;
  Eigen::Matrix<double, kStateDim, kInputDim> dfdu;
  RateJacobians(state0, input0, geom, &dfdx, &dfdu);

  LinearizedModel lin;
  lin.dt = dt;
  lin.a_mat = Eigen::Matrix<double, kStateDim, kStateDim>::Identity() + dt * dfdx;
  lin.b_mat = dt * dfdu;
  lin.c_mat.setIdentity();
  // The one-step prediction is kept unwrapped so that the affine model
  // reproduces it exactly in the same angle branch as state0.
  const StateVector x0 = state0.vector();
  const StateVector predicted = x0 + dt * derivative(state0, input0, geom);
  lin.d_vec = predicted - lin.a_mat * x0 - lin.b_mat * input0.vector();
  return lin;
}

inline AugmentedModel augment(const LinearizedModel& lin,
                              const ControlInput& /*prev_input*/) {
  AugmentedModel aug;
  aug.a_bar.setZero();
  aug.a_bar.topLeftCorner<kStateDim, kStateDim>() = lin.a_mat;
  aug.a_bar.topRightCorner<kStateDim, kInputDim>() = lin.b_mat;
  aug.a_bar.bottomRightCorner<kInputDim, kInputDim>().setIdentity();
  aug.b_bar.topRows<kStateDim>() = lin.b_mat;
  aug.b_bar.bottomRows<kInputDim>().setIdentity();
  aug.d_bar.setZero();
  aug.d_bar.head<kStateDim>() = lin.d_vec;
  aug.c_bar.setZero();
  aug.c_bar.leftCols<kStateDim>() = lin.c_mat;
  return aug;
}

/// Augmented state [state; previous input].
inline Eigen::Matrix<double, kAugmentedDim, 1> AugmentedState(
    const RobotState& state, const ControlInput& prev_input) {
  Eigen::Matrix<double, kAugmentedDim, 1> x;
  x << state.vector(), prev_input.vector();
  return x;
}

}  // namespace apfmpc
