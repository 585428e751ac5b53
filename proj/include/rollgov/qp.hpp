#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>

namespace rollgov {

enum class QpStatus { Optimal, Infeasible, IterationLimit };

struct QpResult {
  QpStatus status = QpStatus::Infeasible;
  Eigen::VectorXd x;
  Eigen::VectorXd lambda; ///< multipliers of A x <= b, zero off the active set
  int iterations = 0;
};

/// Dense strictly convex QP: min 1/2 x'Hx + f'x subject to A x <= b.
/// Dual active-set method starting from the unconstrained minimizer; adds
/// the most violated constraint and takes mixed primal/dual steps, dropping
/// blocking constraints whose multipliers reach zero. An unbounded dual
/// step certifies infeasibility.
inline QpResult solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         int max_iterations = 500) {
  const int n = static_cast<int>(H.rows());
  const int m = static_cast<int>(A.rows());
  if (H.cols() != n || f.size() != n || (m > 0 && A.cols() != n) || b.size() != m)
    throw std::invalid_argument("solve_qp: dimension mismatch");

  const Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("solve_qp: H must be symmetric positive definite");

  QpResult res;
  res.x = llt.solve(-f);
  res.lambda = Eigen::VectorXd::Zero(m);
  if (m == 0) {
    res.status = QpStatus::Optimal;
    return res;
  }

  std::vector<int> active;
  Eigen::VectorXd u(0);
  const double infty = std::numeric_limits<double>::infinity();
  const double feas_tol = 1e-11 * (1.0 + b.cwiseAbs().maxCoeff());

  for (int iter = 0; iter < max_iterations; ++iter) {
    ++res.iterations;

    // most violated inactive constraint
    int p = -1;
    double worst = feas_tol;
    for (int i = 0; i < m; ++i) {
      bool in_active = false;
      for (int j : active) in_active |= (j == i);
      if (in_active) continue;
      const double s = A.row(i).dot(res.x) - b(i);
      if (s > worst) {
        worst = s;
        p = i;
      }
    }
    if (p < 0) {
      for (size_t j = 0; j < active.size(); ++j) res.lambda(active[j]) = u(j);
      res.status = QpStatus::Optimal;
      return res;
    }

    const Eigen::VectorXd np = A.row(p).transpose();
    double u_plus = 0.0;
    double s_p = worst;

    // inner loop: step toward constraint p, dropping blockers as needed
    for (int inner = 0; inner <= m + 1; ++inner) {
      const int q = static_cast<int>(active.size());
      Eigen::VectorXd z;      // primal direction
      Eigen::VectorXd r(q);   // dual direction on the active set
      const Eigen::VectorXd Hinv_np = llt.solve(np);
      if (q == 0) {
        z = Hinv_np;
      } else {
        Eigen::MatrixXd N(n, q);
        for (int j = 0; j < q; ++j) N.col(j) = A.row(active[j]).transpose();
        const Eigen::MatrixXd Hinv_N = llt.solve(N);
        const Eigen::MatrixXd M = N.transpose() * Hinv_N;
        r = M.ldlt().solve(N.transpose() * Hinv_np);
        z = Hinv_np - Hinv_N * r;
      }

      double t1 = infty;
      int blocker = -1;
      for (int j = 0; j < q; ++j) {
        if (r(j) > 1e-12) {
          const double t = u(j) / r(j);
          if (t < t1) {
            t1 = t;
            blocker = j;
          }
        }
      }
      const double zn = z.dot(np);
      const double t2 = (zn > 1e-12) ? s_p / zn : infty;
      const double t = std::min(t1, t2);

      if (t == infty) {
        res.status = QpStatus::Infeasible; // dual unbounded
        return res;
      }

      if (t2 < infty) res.x -= t * z;
      for (int j = 0; j < q; ++j) u(j) -= t * r(j);
      u_plus += t;
      s_p = A.row(p).dot(res.x) - b(p);

      if (t == t2 && s_p <= feas_tol) {
        active.push_back(p);
        u.conservativeResize(q + 1);
        u(q) = u_plus;
        break;
      }
      // dual step hit a blocking constraint: drop it and retry
      if (blocker >= 0) {
        active.erase(active.begin() + blocker);
        Eigen::VectorXd u_new(q - 1);
        int k = 0;
        for (int j = 0; j < q; ++j)
          if (j != blocker) u_new(k++) = u(j);
        u = u_new;
      } else {
        break; // numerical stall; outer loop re-evaluates violations
      }
    }
  }
  res.status = QpStatus::IterationLimit;
  return res;
}

} // namespace rollgov
