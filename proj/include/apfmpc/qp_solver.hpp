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

// Dense convex QP
//
//   minimize    0.5 z' H z + f' z
//   subject to  lower <= A z <= upper,  z_lower <= z <= z_upper
//
// solved by an ADMM operator-splitting iteration over the stacked constraint
// matrix [A; I], followed by an active-set polish that solves the reduced
// KKT system once the iteration has settled on an active set.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace apfmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QpProblem {
  MatrixXd h_mat;
  VectorXd f_vec;
  MatrixXd a_mat;
  VectorXd lower;
  VectorXd upper;
  VectorXd z_lower;
  VectorXd z_upper;

  int num_variables() const { return static_cast<int>(f_vec.size()); }
  int num_constraints() const { return static_cast<int>(a_mat.rows()); }

  double Objective(const VectorXd& z) const {
    return 0.5 * z.dot(h_mat * z) + f_vec.dot(z);
  }

  /// Largest bound violation of z, over both the linear rows and the box.
  double Violation(const VectorXd& z) const {
    double worst = 0.0;
    if (a_mat.rows() > 0) {
      const VectorXd az = a_mat * z;
      for (Eigen::Index i = 0; i < az.size(); ++i) {
        worst = std::max({worst, lower(i) - az(i), az(i) - upper(i)});
      }
    }
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      worst = std::max({worst, z_lower(i) - z(i), z(i) - z_upper(i)});
    }
    return worst;
  }
};

/// Throws std::invalid_argument when dimensions or bounds are inconsistent or
/// H is not symmetric positive semidefinite up to tolerance.
inline void ValidateQp(const QpProblem& p) {
  const Eigen::Index n = p.f_vec.size();
  const Eigen::Index m = p.a_mat.rows();
  if (p.h_mat.rows() != n || p.h_mat.cols() != n) {
    throw std::invalid_argument("QpProblem: H must be n x n");
  }
  if ((m > 0 && p.a_mat.cols() != n) || p.lower.size() != m ||
      p.upper.size() != m) {
    throw std::invalid_argument("QpProblem: A and its bounds disagree in size");
  }
  if (p.z_lower.size() != n || p.z_upper.size() != n) {
    throw std::invalid_argument("QpProblem: box bounds must have n entries");
  }
  if ((p.lower.array() > p.upper.array()).any() ||
      (p.z_lower.array() > p.z_upper.array()).any()) {
    throw std::invalid_argument("QpProblem: lower bound above upper bound");
  }
  const double scale = std::max(1.0, p.h_mat.cwiseAbs().maxCoeff());
  if ((p.h_mat - p.h_mat.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw std::invalid_argument("QpProblem: H is not symmetric");
  }
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(p.h_mat,
                                                Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-8 * scale) {
      throw std::invalid_argument("QpProblem: H is not positive semidefinite");
    }
  }
}

enum class QpStatus { kOptimal, kMaxIterations, kInfeasible };

inline std::string ToString(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kMaxIterations:
      return "max_iterations";
    case QpStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

struct QpSolution {
  VectorXd z;
  QpStatus status = QpStatus::kMaxIterations;
  double primal_residual = kInf;
  double dual_residual = kInf;
  int iterations = 0;
  bool polished = false;
};

struct QpLimits {
  int max_iterations = 4000;
  double tolerance = 1e-4;
};

class QpSolver {
 public:
  static constexpr double kRidge = 1e-8;

  QpSolution Solve(const QpProblem& problem,
                   const std::optional<VectorXd>& warm_start = std::nullopt,
                   const QpLimits& limits = {}) {
    Setup(problem);
    const Eigen::Index n = n_;
    VectorXd x = VectorXd::Zero(n);
    if (warm_start && warm_start->size() == n) x = *warm_start;
    VectorXd z = Project(Stacked(x));
    VectorXd y = VectorXd::Zero(rows_);
    VectorXd y_prev = y;

    double rho = kRhoInit;
    UpdateRho(rho);

    QpSolution best;
    best.z = x;
    std::vector<std::int8_t> last_active;
    std::vector<std::int8_t> polished_active;
    const double tol = limits.tolerance;

    int iter = 0;
    while (iter < limits.max_iterations) {
      ++iter;
      // x-update: (P + sigma I + M' R M) x~ = sigma x - q + M'(R z - y).
      const VectorXd rhs =
          kSigma * x - problem_->f_vec +
          StackedTranspose(rho_vec_.cwiseProduct(z) - y);
      const VectorXd x_tilde = factor_.solve(rhs);
      const VectorXd mz_tilde = Stacked(x_tilde);
      x = kAlpha * x_tilde + (1.0 - kAlpha) * x;
      const VectorXd z_relaxed = kAlpha * mz_tilde + (1.0 - kAlpha) * z;
      const VectorXd z_next =
          Project(z_relaxed + y.cwiseQuotient(rho_vec_));
      y += rho_vec_.cwiseProduct(z_relaxed - z_next);
      z = z_next;

      if (iter % kCheckInterval != 0 && iter != limits.max_iterations) continue;

      const double prim = PrimalResidual(x);
      const double dual = DualResidual(x, y);
      if (prim + dual < best.primal_residual + best.dual_residual) {
        best.z = x;
        best.primal_residual = prim;
        best.dual_residual = dual;
      }

      if (IsPrimalInfeasible(y - y_prev)) {
        best.status = QpStatus::kInfeasible;
        best.iterations = iter;
        return best;
      }
      y_prev = y;

      // Polish once the active set has stopped changing between checks.
      std::vector<std::int8_t> active = ActiveSet(z, y);
      const bool stable = active == last_active;
      last_active = active;
      const bool converged = prim <= tol && dual <= tol;
      if ((stable || converged) && active != polished_active &&
          prim <= kPolishGate && dual <= kPolishGate) {
        polished_active = active;
        if (auto polished = Polish(active, tol)) {
          polished->iterations = iter;
          return *polished;
        }
      }
      if (converged) {
        QpSolution out;
        out.z = x;
        out.status = QpStatus::kOptimal;
        out.primal_residual = prim;
        out.dual_residual = dual;
        out.iterations = iter;
        return out;
      }

      if (iter % kRhoInterval == 0) {
        const double ratio = RhoRatio(x, z, y, prim, dual);
        const double new_rho = std::clamp(rho * ratio, kRhoMin, kRhoMax);
        if (new_rho > 5.0 * rho || new_rho < 0.2 * rho) {
          rho = new_rho;
          UpdateRho(rho);
        }
      }
    }
    best.status = QpStatus::kMaxIterations;
    best.iterations = iter;
    return best;
  }

 private:
  static constexpr double kSigma = 1e-6;
  static constexpr double kAlpha = 1.6;
  static constexpr double kRhoInit = 0.1;
  static constexpr double kRhoMin = 1e-6;
  static constexpr double kRhoMax = 1e6;
  static constexpr double kEqualityRhoScale = 1e3;
  static constexpr int kCheckInterval = 10;
  static constexpr int kRhoInterval = 50;
  static constexpr double kPolishGate = 1e-1;
  static constexpr double kInfeasibleTol = 1e-6;

  void Setup(const QpProblem& problem) {
    problem_ = &problem;
    n_ = problem.num_variables();
    m_ = problem.num_constraints();
    rows_ = m_ + n_;
    p_reg_ = problem.h_mat;
    p_reg_.diagonal().array() += kRidge;
    lower_.resize(rows_);
    upper_.resize(rows_);
    if (m_ > 0) {
      lower_.head(m_) = problem.lower;
      upper_.head(m_) = problem.upper;
    }
    lower_.tail(n_) = problem.z_lower;
    upper_.tail(n_) = problem.z_upper;
    rho_vec_.resize(rows_);
  }

  VectorXd Stacked(const VectorXd& x) const {
    VectorXd out(rows_);
    if (m_ > 0) out.head(m_) = problem_->a_mat * x;
    out.tail(n_) = x;
    return out;
  }

  VectorXd StackedTranspose(const VectorXd& w) const {
    VectorXd out = w.tail(n_);
    if (m_ > 0) out += problem_->a_mat.transpose() * w.head(m_);
    return out;
  }

  VectorXd Project(const VectorXd& v) const {
    return v.cwiseMax(lower_).cwiseMin(upper_);
  }

  void UpdateRho(double rho) {
    for (Eigen::Index i = 0; i < rows_; ++i) {
      const bool free_row = std::isinf(lower_(i)) && std::isinf(upper_(i));
      if (free_row) {
        rho_vec_(i) = kRhoMin;
      } else if (lower_(i) == upper_(i)) {
        rho_vec_(i) = kEqualityRhoScale * rho;
      } else {
        rho_vec_(i) = rho;
      }
    }
    MatrixXd k = p_reg_;
    k.diagonal().array() += kSigma;
    k.diagonal() += rho_vec_.tail(n_);
    if (m_ > 0) {
      const auto& a = problem_->a_mat;
      k.noalias() += a.transpose() * rho_vec_.head(m_).asDiagonal() * a;
    }
    factor_.compute(k);
  }

  double PrimalResidual(const VectorXd& x) const {
    const VectorXd mx = Stacked(x);
    return (mx - Project(mx)).cwiseAbs().maxCoeff();
  }

  double DualResidual(const VectorXd& x, const VectorXd& y) const {
    const VectorXd g =
        problem_->h_mat * x + problem_->f_vec + StackedTranspose(y);
    return n_ > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
  }

  double RhoRatio(const VectorXd& x, const VectorXd& z, const VectorXd& y,
                  double prim, double dual) const {
    const double prim_scale =
        std::max({Stacked(x).cwiseAbs().maxCoeff(), z.cwiseAbs().maxCoeff(),
                  1e-10});
    const double dual_scale = std::max(
        {(problem_->h_mat * x).cwiseAbs().maxCoeff(),
         StackedTranspose(y).cwiseAbs().maxCoeff(),
         problem_->f_vec.cwiseAbs().maxCoeff(), 1e-10});
    const double num = prim / prim_scale;
    const double den = std::max(dual / dual_scale, 1e-12);
    return std::sqrt(std::max(num, 1e-12) / den);
  }

  bool IsPrimalInfeasible(const VectorXd& dy) const {
    const double norm = dy.cwiseAbs().maxCoeff();
    if (norm < 1e-10) return false;
    const double tol = kInfeasibleTol * norm;
    if (StackedTranspose(dy).cwiseAbs().maxCoeff() > tol) return false;
    double support = 0.0;
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (dy(i) > 0.0) {
        if (std::isinf(upper_(i))) return false;
        support += upper_(i) * dy(i);
      } else if (dy(i) < 0.0) {
        if (std::isinf(lower_(i))) return false;
        support += lower_(i) * dy(i);
      }
    }
    return support < -tol;
  }

  // -1 lower bound active, +1 upper bound active, 0 inactive.
  std::vector<std::int8_t> ActiveSet(const VectorXd& z,
                                     const VectorXd& y) const {
    std::vector<std::int8_t> active(rows_, 0);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (lower_(i) == upper_(i)) {
        active[i] = -1;
      } else if (z(i) - lower_(i) < -y(i)) {
        active[i] = -1;
      } else if (upper_(i) - z(i) < y(i)) {
        active[i] = 1;
      }
    }
    return active;
  }

  std::optional<QpSolution> Polish(const std::vector<std::int8_t>& active,
                                   double tol) const {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < rows_; ++i) {
      if (active[i] != 0) idx.push_back(i);
    }
    const Eigen::Index k = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index dim = n_ + k;
    MatrixXd a_act(k, n_);
    VectorXd b_act(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index i = idx[r];
      if (i < m_) {
        a_act.row(r) = problem_->a_mat.row(i);
      } else {
        a_act.row(r).setZero();
        a_act(r, i - m_) = 1.0;
      }
      b_act(r) = active[i] < 0 ? lower_(i) : upper_(i);
    }
    MatrixXd kkt = MatrixXd::Zero(dim, dim);
    kkt.topLeftCorner(n_, n_) = problem_->h_mat;
    kkt.topRightCorner(n_, k) = a_act.transpose();
    kkt.bottomLeftCorner(k, n_) = a_act;
    VectorXd rhs(dim);
    rhs.head(n_) = -problem_->f_vec;
    rhs.tail(k) = b_act;

    // Regularized factorization with iterative refinement against the exact
    // KKT matrix; handles linearly dependent active rows.
    constexpr double kDelta = 1e-10;
    MatrixXd kkt_reg = kkt;
    kkt_reg.diagonal().head(n_).array() += kRidge + kDelta;
    kkt_reg.diagonal().tail(k).array() -= kDelta;
    Eigen::PartialPivLU<MatrixXd> lu(kkt_reg);
    VectorXd sol = lu.solve(rhs);
    for (int refine = 0; refine < 5; ++refine) {
      sol += lu.solve(rhs - kkt * sol);
    }
    if (!sol.allFinite()) return std::nullopt;

    VectorXd y = VectorXd::Zero(rows_);
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index i = idx[r];
      double yi = sol(n_ + r);
      // Dual sign must match the side of the active bound.
      if (lower_(i) != upper_(i)) {
        if (active[i] < 0 && yi > tol) return std::nullopt;
        if (active[i] > 0 && yi < -tol) return std::nullopt;
        yi = active[i] < 0 ? std::min(yi, 0.0) : std::max(yi, 0.0);
      }
      y(i) = yi;
    }
    QpSolution out;
    out.z = sol.head(n_);
    out.primal_residual = PrimalResidual(out.z);
    out.dual_residual = DualResidual(out.z, y);
    if (out.primal_residual > tol || out.dual_residual > tol) {
      return std::nullopt;
    }
    out.status = QpStatus::kOptimal;
    out.polished = true;
    return out;
  }

  const QpProblem* problem_ = nullptr;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  Eigen::Index rows_ = 0;
  MatrixXd p_reg_;
  VectorXd lower_;
  VectorXd upper_;
  VectorXd rho_vec_;
  Eigen::LLT<MatrixXd> factor_;
};

inline QpSolution solve(const QpProblem& problem,
                        const std::optional<VectorXd>& warm_start = std::nullopt,
                        const QpLimits& limits = {}) {
  QpSolver solver;
  return solver.Solve(problem, warm_start, limits);
}

}  // namespace apfmpc
