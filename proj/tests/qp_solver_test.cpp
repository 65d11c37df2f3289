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

#include "apfmpc/qp_solver.hpp"

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "suites.hpp"

namespace apfmpc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

QpProblem RandomBoxQp(testing::Rng& rng, int n) {
  MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = rng.Uniform(-1, 1);
  }
  VectorXd f(n), lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    f(i) = rng.Uniform(-5, 5);
    lo(i) = rng.Uniform(-1.5, -0.1);
    hi(i) = rng.Uniform(0.1, 1.5);
  }
  return testing::BoxQp(m.transpose() * m + 0.1 * MatrixXd::Identity(n, n), f, lo, hi);
}

/// A random box QP with a few general inequality rows that the origin satisfies.
QpProblem RandomGeneralQp(testing::Rng& rng, int n, int m) {
  QpProblem qp = RandomBoxQp(rng, n);
  qp.a_mat.resize(m, n);
  qp.lower.resize(m);
  qp.upper.resize(m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < n; ++c) qp.a_mat(r, c) = rng.Uniform(-1, 1);
    qp.lower(r) = rng.Uniform(-2, -0.2);
    qp.upper(r) = rng.Uniform(0.2, 2);
  }
  return qp;
}

TEST(QpSolverTest, UnconstrainedScalar) {
  const QpProblem qp = testing::BoxQp(MatrixXd::Identity(1, 1), VectorXd::Constant(1, -1.0),
                                      VectorXd::Constant(1, -kInf),
                                      VectorXd::Constant(1, kInf));
  const QpSolution sol = solve(qp);
  EXPECT_EQ(sol.status, QpStatus::kOptimal);
  EXPECT_NEAR(sol.z(0), 1.0, 1e-8);
}

TEST(QpSolverTest, HalfSpace) {
  QpProblem qp = testing::BoxQp(MatrixXd::Identity(2, 2), VectorXd::Zero(2),
                                VectorXd::Constant(2, -kInf), VectorXd::Constant(2, kInf));
  qp.a_mat = MatrixXd(1, 2);
  qp.a_mat << 1.0, 0.0;
  qp.lower = VectorXd::Constant(1, 2.0);
  qp.upper = VectorXd::Constant(1, kInf);
  const QpSolution sol = solve(qp);
  EXPECT_EQ(sol.status, QpStatus::kOptimal);
  EXPECT_NEAR(sol.z(0), 2.0, 1e-8);
  EXPECT_NEAR(sol.z(1), 0.0, 1e-8);
}

TEST(QpSolverTest, MatchesProjectedGradientOracle) {
  const testing::QpReport rep = testing::RunQpSuite(40, 5);
  EXPECT_EQ(rep.non_optimal, 0);
  EXPECT_LE(rep.max_objective_gap, 1e-6);
  EXPECT_LE(rep.unconstrained_error, 1e-8);
  EXPECT_LE(rep.halfspace_error, 1e-8);
}

TEST(QpSolverTest, NoWorseThanSampledFeasibleVertices) {
  testing::Rng rng(41);
  for (int k = 0; k < 20; ++k) {
    const QpProblem qp = RandomBoxQp(rng, 6);
    const QpSolution sol = solve(qp);
    ASSERT_EQ(sol.status, QpStatus::kOptimal);
    for (int v = 0; v < 64; ++v) {
      VectorXd vertex(6);
      for (int i = 0; i < 6; ++i) vertex(i) = (v >> i & 1) ? qp.z_upper(i) : qp.z_lower(i);
      EXPECT_LE(qp.Objective(sol.z), qp.Objective(vertex) + 1e-9);
    }
  }
}

TEST(QpSolverTest, FeasibleOnOptimalReturn) {
  testing::Rng rng(42);
  const QpLimits limits;
  for (int k = 0; k < 30; ++k) {
    const QpProblem qp = RandomGeneralQp(rng, 12, 8);
    const QpSolution sol = solve(qp, std::nullopt, limits);
    ASSERT_EQ(sol.status, QpStatus::kOptimal);
    EXPECT_LE(qp.Violation(sol.z), 10.0 * limits.tolerance);
  }
}

TEST(QpSolverTest, WarmStartDoesNotHurt) {
  testing::Rng rng(43);
  for (int k = 0; k < 20; ++k) {
    const QpProblem qp = RandomGeneralQp(rng, 10, 5);
    const QpSolution cold = solve(qp);
    const QpSolution warm = solve(qp, cold.z);
    ASSERT_EQ(warm.status, QpStatus::kOptimal);
    EXPECT_LE(qp.Objective(warm.z), qp.Objective(cold.z) + 1e-6);
    EXPECT_LE(warm.iterations, cold.iterations);
  }
}

TEST(QpSolverTest, Deterministic) {
  testing::Rng rng(44);
  const QpProblem qp = RandomGeneralQp(rng, 15, 10);
  QpSolver solver;
  const QpSolution a = solver.Solve(qp);
  const QpSolution b = solver.Solve(qp);
  const QpSolution c = solve(qp);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.z, c.z);
  EXPECT_EQ(a.iterations, c.iterations);
}

TEST(QpSolverTest, SingularHessianHandled) {
  // Zero curvature in z2: the box bound decides.
  MatrixXd h = MatrixXd::Zero(2, 2);
  h(0, 0) = 1.0;
  const QpProblem qp = testing::BoxQp(h, Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(-3, -3),
                                      Eigen::Vector2d(3, 0.5));
  const QpSolution sol = solve(qp);
  EXPECT_EQ(sol.status, QpStatus::kOptimal);
  EXPECT_NEAR(sol.z(0), 1.0, 1e-5);
  EXPECT_NEAR(sol.z(1), 0.5, 1e-5);
}

TEST(QpSolverTest, DetectsInfeasibility) {
  QpProblem qp = testing::BoxQp(MatrixXd::Identity(2, 2), VectorXd::Zero(2),
                                VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0));
  qp.a_mat = MatrixXd(1, 2);
  qp.a_mat << 1.0, 1.0;
  qp.lower = VectorXd::Constant(1, 5.0);
  qp.upper = VectorXd::Constant(1, kInf);
  EXPECT_EQ(solve(qp).status, QpStatus::kInfeasible);
}

TEST(QpSolverTest, IterationCapReturnsBestIterate) {
  testing::Rng rng(45);
  const QpProblem qp = RandomGeneralQp(rng, 20, 10);
  QpLimits limits;
  limits.max_iterations = 3;
  const QpSolution sol = solve(qp, std::nullopt, limits);
  EXPECT_EQ(sol.status, QpStatus::kMaxIterations);
  EXPECT_EQ(sol.iterations, 3);
  EXPECT_EQ(sol.z.size(), 20);
}

TEST(ValidateQpTest, RejectsMalformedProblems) {
  QpProblem ok = testing::BoxQp(MatrixXd::Identity(2, 2), VectorXd::Zero(2),
                                VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0));
  EXPECT_NO_THROW(ValidateQp(ok));

  QpProblem bad_dims = ok;
  bad_dims.f_vec = VectorXd::Zero(3);
  EXPECT_THROW(ValidateQp(bad_dims), std::invalid_argument);

  QpProblem asym = ok;
  asym.h_mat(0, 1) = 1.0;
  EXPECT_THROW(ValidateQp(asym), std::invalid_argument);

  QpProblem indefinite = ok;
  indefinite.h_mat(1, 1) = -1.0;
  EXPECT_THROW(ValidateQp(indefinite), std::invalid_argument);

  QpProblem crossed = ok;
  crossed.z_lower(0) = 2.0;
  EXPECT_THROW(ValidateQp(crossed), std::invalid_argument);
}

TEST(QpStatusTest, Names) {
  EXPECT_EQ(ToString(QpStatus::kOptimal), "optimal");
  EXPECT_EQ(ToString(QpStatus::kInfeasible), "infeasible");
  EXPECT_EQ(ToString(QpStatus::kMaxIterations), "max_iterations");
}

}  // namespace
}  // namespace apfmpc
