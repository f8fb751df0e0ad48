#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "loopmod/errors.hpp"
#include "loopmod/graph.hpp"

namespace loopmod {

/// min sum_e w(e) rho(e)^2  subject to  sum_{e in row} rho(e) >= 1 for every
/// row, rho >= 0. Each row is the edge set of one loop.
struct QPProblem {
  std::vector<double> weights;
  std::vector<std::vector<EdgeId>> rows;
};

struct QPSolution {
  std::vector<double> rho;
  std::vector<double> lambda;             // one per row
  std::vector<double> bound_multipliers;  // one per edge, for rho >= 0
  double objective = 0.0;
  double dual_objective = 0.0;
  double kkt_residual = 0.0;
};

/// Goldfarb-Idnani dual active-set method specialised to a diagonal
/// Hessian 2*diag(w) and 0/1 constraint rows.
///
/// The solver is incremental: rows may be appended after a solve() and the
/// next solve() continues from the current optimum, which stays dual
/// feasible. This is what makes constraint generation cheap.
///
/// Invariant between steps: J^T N_A = [R; 0] where N_A holds the active
/// constraint normals as columns and J = L^{-T} Q with L L^T the Hessian.
class ActiveSetQP {
 public:
  explicit ActiveSetQP(std::vector<double> weights, double tol = 1e-8)
      : w_(std::move(weights)), tol_(tol), m_(w_.size()) {
    if (!(tol_ > 0.0 && tol_ < 1.0)) throw std::invalid_argument("tol must lie in (0, 1)");
    for (double wi : w_) {
      if (!(wi > 0.0) || !std::isfinite(wi)) throw std::invalid_argument("weights must be positive");
    }
    J_ = Eigen::MatrixXd::Zero(m_, m_);
    for (std::size_t e = 0; e < m_; ++e) J_(e, e) = 1.0 / std::sqrt(2.0 * w_[e]);
    R_ = Eigen::MatrixXd::Zero(m_, m_);
    x_ = Eigen::VectorXd::Zero(m_);
    bound_active_.assign(m_, 0);
  }

  std::size_t num_edges() const { return m_; }
  std::size_t num_rows() const { return rows_.size(); }
  double tolerance() const { return tol_; }

  /// Appends a constraint row; returns its index.
  std::size_t add_row(std::vector<EdgeId> row) {
    if (row.empty()) throw std::invalid_argument("constraint rows must be nonempty");
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    if (row.back() >= m_) throw std::invalid_argument("constraint row references a missing edge");
    rows_.push_back(std::move(row));
    row_active_.push_back(0);
    return rows_.size() - 1;
  }

  /// Runs dual active-set steps until no constraint is violated by more
  /// than tol/100. Throws SolverError if the step budget runs out.
  void solve() {
    const double feas_tol = 0.01 * tol_;
    const std::size_t budget = 100 * (rows_.size() + m_) + 1000;
    std::size_t steps = 0;
    Eigen::VectorXd d(m_);

    for (;;) {
      Constraint p{};
      double s_p = -feas_tol;
      bool found = false;
      for (std::size_t j = 0; j < rows_.size(); ++j) {
        if (row_active_[j]) continue;
        double s = slack({false, j});
        if (s < s_p) {
          s_p = s;
          p = {false, j};
          found = true;
        }
      }
      for (std::size_t e = 0; e < m_; ++e) {
        if (bound_active_[e]) continue;
        double s = slack({true, e});
        if (s < s_p) {
          s_p = s;
          p = {true, e};
          found = true;
        }
      }
      if (!found) break;

      double u_p = 0.0;
      for (;;) {
        if (++steps > budget) {
          throw SolverError("active-set step budget exhausted", solution().kkt_residual);
        }
        const std::size_t q = active_.size();
        project(p, d);
        Eigen::VectorXd z = J_.rightCols(m_ - q) * d.tail(m_ - q);
        Eigen::VectorXd r = R_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

        double t1 = kInf;
        std::size_t k = q;
        for (std::size_t j = 0; j < q; ++j) {
          if (r[j] > 0.0 && u_[j] / r[j] < t1) {
            t1 = u_[j] / r[j];
            k = j;
          }
        }
        const double zn = d.tail(m_ - q).squaredNorm();
        const bool dependent = zn <= 1e-14 * d.squaredNorm();
        const double t2 = dependent ? kInf : -slack(p) / zn;

        if (t1 == kInf && t2 == kInf) {
          throw SolverError("constraints are infeasible", kInf);
        }
        if (dependent) {
          for (std::size_t j = 0; j < q; ++j) u_[j] = std::max(0.0, u_[j] - t1 * r[j]);
          u_p += t1;
          drop(k);
          continue;
        }
        const double t = std::min(t1, t2);
        x_ += t * z;
        for (std::size_t j = 0; j < q; ++j) u_[j] = std::max(0.0, u_[j] - t * r[j]);
        u_p += t;
        if (t2 <= t1) {
          add(p, d, u_p);
          break;
        }
        drop(k);
      }
    }
    refresh_primal();
  }

  const Eigen::VectorXd& rho() const { return x_; }

  /// Current primal/dual pair with its KKT residual.
  QPSolution solution() const {
    QPSolution sol;
    sol.rho.assign(x_.data(), x_.data() + m_);
    sol.lambda.assign(rows_.size(), 0.0);
    sol.bound_multipliers.assign(m_, 0.0);
    for (std::size_t j = 0; j < active_.size(); ++j) {
      if (active_[j].bound) sol.bound_multipliers[active_[j].index] = u_[j];
      else sol.lambda[active_[j].index] = u_[j];
    }

    std::vector<double> ntl(m_, 0.0);  // N^T lambda + bound multipliers
    double residual = 0.0;
    double lambda_sum = 0.0;
    for (std::size_t j = 0; j < rows_.size(); ++j) {
      double len = 0.0;
      for (EdgeId e : rows_[j]) {
        len += sol.rho[e];
        ntl[e] += sol.lambda[j];
      }
      residual = std::max(residual, 1.0 - len);
      residual = std::max(residual, sol.lambda[j] * std::abs(len - 1.0));
      residual = std::max(residual, -sol.lambda[j]);
      lambda_sum += sol.lambda[j];
    }
    double dual = lambda_sum;
    for (std::size_t e = 0; e < m_; ++e) {
      const double mu = sol.bound_multipliers[e];
      ntl[e] += mu;
      residual = std::max(residual, -sol.rho[e]);
      residual = std::max(residual, mu * std::abs(sol.rho[e]));
      residual = std::max(residual, -mu);
      residual = std::max(residual, std::abs(2.0 * w_[e] * sol.rho[e] - ntl[e]));
      sol.objective += w_[e] * sol.rho[e] * sol.rho[e];
      dual -= 0.25 * ntl[e] * ntl[e] / w_[e];
    }
    sol.dual_objective = dual;
    sol.kkt_residual = residual;
    return sol;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  struct Constraint {
    bool bound;
    std::size_t index;
  };

  double slack(Constraint c) const {
    if (c.bound) return x_[c.index];
    double len = 0.0;
    for (EdgeId e : rows_[c.index]) len += x_[e];
    return len - 1.0;
  }

  // d = J^T n_c
  void project(Constraint c, Eigen::VectorXd& d) const {
    if (c.bound) {
      d = J_.row(c.index).transpose();
      return;
    }
    d.setZero();
    for (EdgeId e : rows_[c.index]) d += J_.row(e).transpose();
  }

  // Rotates d so that d.tail(m-q-1) vanishes, carrying J along, then
  // appends d.head(q+1) as the new column of R.
  void add(Constraint c, Eigen::VectorXd& d, double multiplier) {
    const std::size_t q = active_.size();
    for (std::size_t j = m_ - 1; j > q; --j) {
      const double a = d[j - 1];
      const double b = d[j];
      if (b == 0.0) continue;
      const double h = std::hypot(a, b);
      const double cs = a / h;
      const double sn = b / h;
      d[j - 1] = h;
      d[j] = 0.0;
      Eigen::VectorXd left = J_.col(j - 1);
      J_.col(j - 1) = cs * left + sn * J_.col(j);
      J_.col(j) = -sn * left + cs * J_.col(j);
    }
    R_.col(q).head(q + 1) = d.head(q + 1);
    active_.push_back(c);
    u_.push_back(multiplier);
    if (c.bound) bound_active_[c.index] = 1;
    else row_active_[c.index] = 1;
  }

  // Removes active constraint k and restores R to upper-triangular form.
  void drop(std::size_t k) {
    const std::size_t q = active_.size();
    const Constraint c = active_[k];
    if (c.bound) bound_active_[c.index] = 0;
    else row_active_[c.index] = 0;
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(k));
    u_.erase(u_.begin() + static_cast<std::ptrdiff_t>(k));

    for (std::size_t j = k; j + 1 < q; ++j) R_.col(j) = R_.col(j + 1);
    R_.col(q - 1).setZero();
    for (std::size_t i = k; i + 1 < q; ++i) {
      const double a = R_(i, i);
      const double b = R_(i + 1, i);
      if (b == 0.0) continue;
      const double h = std::hypot(a, b);
      const double cs = a / h;
      const double sn = b / h;
      for (std::size_t j = i; j + 1 < q; ++j) {
        const double ri = R_(i, j);
        const double rk = R_(i + 1, j);
        R_(i, j) = cs * ri + sn * rk;
        R_(i + 1, j) = -sn * ri + cs * rk;
      }
      R_(i + 1, i) = 0.0;
      Eigen::VectorXd left = J_.col(i);
      J_.col(i) = cs * left + sn * J_.col(i + 1);
      J_.col(i + 1) = -sn * left + cs * J_.col(i + 1);
    }
  }

  // Re-derives rho from the multipliers so stationarity holds to rounding.
  void refresh_primal() {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m_);
    for (std::size_t j = 0; j < active_.size(); ++j) {
      const Constraint& c = active_[j];
      if (c.bound) {
        g[c.index] += u_[j];
      } else {
        for (EdgeId e : rows_[c.index]) g[e] += u_[j];
      }
    }
    for (std::size_t e = 0; e < m_; ++e) x_[e] = bound_active_[e] ? 0.0 : g[e] / (2.0 * w_[e]);
  }

  std::vector<double> w_;
  double tol_;
  std::size_t m_;
  std::vector<std::vector<EdgeId>> rows_;
  std::vector<char> row_active_;
  std::vector<char> bound_active_;
  std::vector<Constraint> active_;
  std::vector<double> u_;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  Eigen::VectorXd x_;
};

/// Solves the problem from scratch. Throws std::invalid_argument for an
/// empty constraint set and SolverError when the KKT residual exceeds tol.
inline QPSolution solve(const QPProblem& problem, double tol = 1e-8) {
  if (problem.rows.empty()) throw std::invalid_argument("QP has no constraint rows");
  ActiveSetQP qp(problem.weights, tol);
  for (const auto& row : problem.rows) qp.add_row(row);
  qp.solve();
  QPSolution sol = qp.solution();
  if (sol.kkt_residual > tol) throw SolverError("QP did not reach the requested accuracy", sol.kkt_residual);
  return sol;
}

}  // namespace loopmod
