#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace rollgov {

/// Discrete Laguerre command basis. Abar is upper triangular with alpha on
/// the diagonal and (-alpha)^(j-i-1) * mu above it; Cbar_j = (-alpha)^j.
/// alpha = 0 degenerates to a shift register.
struct LaguerreBasis {
  double alpha = 0.0;
  int depth = 4;

  double mu() const { return 1.0 - alpha; }
  bool schur() const { return alpha >= 0.0 && alpha < 1.0; }

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw std::invalid_argument("LaguerreBasis: alpha must be in [0, 1]");
    if (depth < 1) throw std::invalid_argument("LaguerreBasis: depth must be >= 1");
  }

  Eigen::MatrixXd Abar() const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(depth, depth);
    for (int i = 0; i < depth; ++i) {
      A(i, i) = alpha;
      for (int j = i + 1; j < depth; ++j) A(i, j) = std::pow(-alpha, j - i - 1) * mu();
    }
    return A;
  }

  Eigen::RowVectorXd Cbar() const {
    Eigen::RowVectorXd C(depth);
    for (int j = 0; j < depth; ++j) C(j) = std::pow(-alpha, j);
    return C;
  }
};

/// Solves the discrete-time Lyapunov equation Abar' P Abar - P + Q = 0
/// exactly through the Kronecker-vectorized linear system.
inline Eigen::MatrixXd solve_discrete_lyapunov(const Eigen::MatrixXd& Abar,
                                               const Eigen::MatrixXd& Q) {
  const int n = static_cast<int>(Abar.rows());
  if (Q.rows() != n || Q.cols() != n)
    throw std::invalid_argument("solve_discrete_lyapunov: dimension mismatch");
  const Eigen::MatrixXd At = Abar.transpose();
  Eigen::MatrixXd K = Eigen::MatrixXd::Identity(n * n, n * n);
  // vec(A' P A) = (A' (x) A') vec(P) with column-major vec
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K.block(i * n, j * n, n, n) -= At(i, j) * At;
  Eigen::VectorXd vecQ(n * n);
  for (int j = 0; j < n; ++j) vecQ.segment(j * n, n) = Q.col(j);
  const Eigen::VectorXd vecP = K.fullPivLu().solve(vecQ);
  Eigen::MatrixXd P(n, n);
  for (int j = 0; j < n; ++j) P.col(j) = vecP.segment(j * n, n);
  // symmetrize away round-off
  return 0.5 * (P + P.transpose());
}

/// QP weights for the extended command governor: Q = k_L I on the steady
/// command, P the Lyapunov cost of the virtual state.
struct EcgWeights {
  Eigen::MatrixXd P;
  double k_L = 1.0;

  static EcgWeights from_basis(const LaguerreBasis& basis, double k_L = 1.0) {
    if (!(k_L > 0.0)) throw std::invalid_argument("EcgWeights: k_L must be positive");
    if (!basis.schur()) throw std::invalid_argument("EcgWeights: basis must be Schur");
    EcgWeights w;
    w.k_L = k_L;
    const Eigen::MatrixXd Q = k_L * Eigen::MatrixXd::Identity(basis.depth, basis.depth);
    w.P = solve_discrete_lyapunov(basis.Abar(), Q);
    const double residual =
        (basis.Abar().transpose() * w.P * basis.Abar() - w.P + Q).lpNorm<Eigen::Infinity>();
    if (residual > 1e-9 * Q.lpNorm<Eigen::Infinity>())
      throw std::runtime_error("EcgWeights: Lyapunov residual too large");
    return w;
  }
};

} // namespace rollgov
