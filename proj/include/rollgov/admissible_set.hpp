#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <iostream>
#include <string>

#include "rollgov/laguerre.hpp"
#include "rollgov/linearization.hpp"

namespace rollgov {

/// Polyhedral output constraints A_y y <= b_y. The steering application uses
/// the symmetric box |LTR| <= ltr_lim, |delta_SW| <= delta_sw_lim.
struct OutputConstraints {
  Eigen::MatrixXd A_y;
  Eigen::VectorXd b_y;
  double ltr_lim = 0.0;
  double delta_sw_lim = 0.0;

  void validate() const {
    if (A_y.rows() != b_y.size())
      throw std::invalid_argument("OutputConstraints: row count mismatch");
    if (!(b_y.array() > 0.0).all())
      throw std::invalid_argument("OutputConstraints: b_y must be elementwise positive");
  }

  static OutputConstraints box(double ltr_lim, double delta_sw_lim) {
    if (!(ltr_lim > 0.0 && delta_sw_lim > 0.0))
      throw std::invalid_argument("OutputConstraints: limits must be positive");
    OutputConstraints yc;
    yc.A_y.resize(4, 2);
    yc.A_y << 1, 0, -1, 0, 0, 1, 0, -1;
    yc.b_y.resize(4);
    yc.b_y << ltr_lim, ltr_lim, delta_sw_lim, delta_sw_lim;
    yc.ltr_lim = ltr_lim;
    yc.delta_sw_lim = delta_sw_lim;
    return yc;
  }

  static OutputConstraints generic(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    OutputConstraints yc;
    yc.A_y = A;
    yc.b_y = b;
    yc.validate();
    return yc;
  }
};

enum class SetVariant { Plain, DisturbanceAugmented, EcgAugmented };

inline const char* to_string(SetVariant v) {
  switch (v) {
    case SetVariant::Plain: return "plain";
    case SetVariant::DisturbanceAugmented: return "disturbance_augmented";
    case SetVariant::EcgAugmented: return "ecg_augmented";
  }
  return "plain";
}

/// Stacked inner approximation of the maximal output admissible set:
/// A_O x <= b_O over x = (command, state[, disturbance]). Rows come in
/// blocks of rows(A_y): prediction steps k = 0..N followed by the
/// steady-state block with margin epsilon.
struct AdmissibleSet {
  Eigen::MatrixXd A_O;
  Eigen::VectorXd b_O;
  int horizon = 0;
  double epsilon = 0.0;
  SetVariant variant = SetVariant::Plain;
  std::string model_id;
  int n_cmd = 1;
  int n_state = 4;
  int n_dist = 0;
  int block_rows = 4;
  bool finite_determination_ok = true;
  Eigen::MatrixXd A_y; ///< output constraint rows, kept for offset folding
  Eigen::VectorXd b_y;

  int cols() const { return n_cmd + n_state + n_dist; }
  int rows() const { return static_cast<int>(A_O.rows()); }

  Eigen::VectorXd row_margins(const Eigen::VectorXd& point) const {
    if (point.size() != cols()) throw std::invalid_argument("row_margins: dimension mismatch");
    return b_O - A_O * point;
  }

  bool membership(const Eigen::VectorXd& point, double tol = 0.0) const {
    return (row_margins(point).array() >= -tol).all();
  }

  /// Subtracts the block-repeated output offset A_y * y_offset from a margin
  /// vector. The stored rows constrain output deviations from the source
  /// model's trim; physical constraints bound the absolute outputs, so
  /// governor queries fold the trim output in here.
  void fold_output_offset(Eigen::VectorXd& margins, const Eigen::VectorXd& y_offset) const {
    if (y_offset.size() != A_y.cols())
      throw std::invalid_argument("fold_output_offset: offset dimension");
    const Eigen::VectorXd shift = A_y * y_offset;
    const int n_blocks = rows() / block_rows;
    for (int b = 0; b < n_blocks; ++b) margins.segment(b * block_rows, block_rows) -= shift;
  }

  Eigen::VectorXd row_margins(const Eigen::VectorXd& point, const Eigen::VectorXd& y_offset) const {
    Eigen::VectorXd m = row_margins(point);
    fold_output_offset(m, y_offset);
    return m;
  }

  bool membership(const Eigen::VectorXd& point, const Eigen::VectorXd& y_offset,
                  double tol) const {
    return (row_margins(point, y_offset).array() >= -tol).all();
  }
};

namespace detail {

/// Stacks the prediction rows of Eq-style O-infinity construction for a
/// generic discrete (A, B, C, D) with output constraints (A_y, b_y).
inline AdmissibleSet stack_oinf(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::MatrixXd& C, const Eigen::MatrixXd& D,
                                const OutputConstraints& yc, int N, double epsilon,
                                const std::string& model_id) {
  const int n = static_cast<int>(A.rows());
  const int brows = static_cast<int>(yc.A_y.rows());

  AdmissibleSet set;
  set.horizon = N;
  set.epsilon = epsilon;
  set.model_id = model_id;
  set.n_cmd = static_cast<int>(B.cols());
  set.n_state = n;
  set.block_rows = brows;
  set.A_O.setZero(brows * (N + 2), set.n_cmd + n);
  set.b_O.resize(brows * (N + 2));

  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::PartialPivLU<Eigen::MatrixXd> IA_lu(I - A);
  const Eigen::MatrixXd IA_inv_B = IA_lu.solve(B);

  Eigen::MatrixXd Ak = I; // A^k
  for (int k = 0; k <= N; ++k) {
    // y_k = (C (I-A)^{-1} (I-A^k) B + D) u + C A^k x
    const Eigen::MatrixXd Su = C * (IA_inv_B - Ak * IA_inv_B) + D;
    const Eigen::MatrixXd Sx = C * Ak;
    set.A_O.block(brows * k, 0, brows, set.n_cmd) = yc.A_y * Su;
    set.A_O.block(brows * k, set.n_cmd, brows, n) = yc.A_y * Sx;
    set.b_O.segment(brows * k, brows) = yc.b_y;
    Ak = Ak * A;
  }

  // steady-state block: A_y H u <= (1 - eps) b_y
  const Eigen::MatrixXd H = C * IA_inv_B + D;
  set.A_O.block(brows * (N + 1), 0, brows, set.n_cmd) = yc.A_y * H;
  set.b_O.segment(brows * (N + 1), brows) = (1.0 - epsilon) * yc.b_y;
  set.A_y = yc.A_y;
  set.b_y = yc.b_y;
  return set;
}

/// Samples directions and checks that the k = N block is redundant given
/// the earlier rows (statistical finite-determination check).
inline bool finite_determination_check(const AdmissibleSet& set, int n_dirs = 128) {
  const int brows = set.block_rows;
  const int last_block = brows * set.horizon;
  const int cols = set.cols();
  uint64_t s = 0x9e3779b97f4a7c15ull;
  auto next = [&s]() {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return (z >> 11) * 0x1.0p-53;
  };
  for (int trial = 0; trial < n_dirs; ++trial) {
    Eigen::VectorXd dir(cols);
    for (int j = 0; j < cols; ++j) dir(j) = 2.0 * next() - 1.0;
    if (dir.norm() < 1e-9) continue;
    dir.normalize();
    // farthest point along dir satisfying all rows except the k = N block
    double t_max = std::numeric_limits<double>::infinity();
    for (int i = 0; i < set.rows(); ++i) {
      if (i >= last_block && i < last_block + brows) continue;
      const double a = set.A_O.row(i).dot(dir);
      if (a > 1e-12) t_max = std::min(t_max, set.b_O(i) / a);
    }
    if (!std::isfinite(t_max)) continue;
    const Eigen::VectorXd probe = (1.0 - 1e-9) * t_max * dir;
    for (int i = last_block; i < last_block + brows; ++i) {
      if (set.A_O.row(i).dot(probe) > set.b_O(i) + 1e-9) return false;
    }
  }
  return true;
}

} // namespace detail

/// Builds the stacked inner approximation of O-infinity for a discrete
/// Schur model. N defaults to 100 steps; epsilon tightens the steady-state
/// block. A statistical redundancy check of the k = N rows warns when the
/// horizon looks too short.
inline AdmissibleSet build_oinf(const LinearModel& model, const OutputConstraints& yc, int N = 100,
                                double epsilon = 1e-3, bool check_fd = true) {
  if (!model.discrete) throw std::invalid_argument("build_oinf: model must be discrete");
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_oinf: epsilon must be positive");
  if (!model.schur()) throw std::invalid_argument("build_oinf: model must be Schur");

  AdmissibleSet set = detail::stack_oinf(model.A, model.B, model.C, model.D, yc, N, epsilon,
                                         model.id);
  set.variant = SetVariant::Plain;
  if (check_fd) {
    set.finite_determination_ok = detail::finite_determination_check(set);
    if (!set.finite_determination_ok)
      std::cerr << "warning: O-infinity horizon N = " << N
                << " may be too short for model " << model.id << "\n";
  }
  return set;
}

/// Generic-system overload for arbitrary discrete (A, B, C, D).
inline AdmissibleSet build_oinf(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                const Eigen::MatrixXd& C, const Eigen::MatrixXd& D,
                                const OutputConstraints& yc, int N, double epsilon,
                                const std::string& id = "generic", bool check_fd = false) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_oinf: epsilon must be positive");
  const double rho =
      Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues().cwiseAbs().maxCoeff();
  if (!(rho < 1.0)) throw std::invalid_argument("build_oinf: model must be Schur");
  AdmissibleSet set = detail::stack_oinf(A, B, C, D, yc, N, epsilon, id);
  set.variant = SetVariant::Plain;
  if (check_fd) set.finite_determination_ok = detail::finite_determination_check(set);
  return set;
}

/// Appends constant-over-horizon disturbance columns (A_y in every row
/// block, steady-state included).
inline AdmissibleSet augment_disturbance(const AdmissibleSet& set) {
  if (set.variant != SetVariant::Plain)
    throw std::invalid_argument("augment_disturbance: set already augmented");
  const int l = static_cast<int>(set.A_y.cols());
  AdmissibleSet out = set;
  out.variant = SetVariant::DisturbanceAugmented;
  out.n_dist = l;
  out.A_O.conservativeResize(Eigen::NoChange, set.cols() + l);
  const int n_blocks = set.rows() / set.block_rows;
  for (int b = 0; b < n_blocks; ++b)
    out.A_O.block(b * set.block_rows, set.cols(), set.block_rows, l) = set.A_y;
  return out;
}

/// Builds the ECG-augmented O-infinity set over (rho, x, xbar): the plant
/// input follows the Laguerre rollout Cbar xbar + rho with xbar' = Abar xbar.
inline AdmissibleSet build_ecg_oinf(const LinearModel& model, const OutputConstraints& yc,
                                    const LaguerreBasis& basis, int N = 100, double epsilon = 1e-3,
                                    bool check_fd = true) {
  if (!model.discrete) throw std::invalid_argument("build_ecg_oinf: model must be discrete");
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_ecg_oinf: epsilon must be positive");
  if (!model.schur()) throw std::invalid_argument("build_ecg_oinf: model must be Schur");
  if (!basis.schur()) throw std::invalid_argument("build_ecg_oinf: basis Abar must be Schur");

  const int q = basis.depth;
  const Eigen::MatrixXd Abar = basis.Abar();
  const Eigen::RowVectorXd Cbar = basis.Cbar();

  Eigen::MatrixXd A_aug = Eigen::MatrixXd::Zero(4 + q, 4 + q);
  A_aug.topLeftCorner(4, 4) = model.A;
  A_aug.topRightCorner(4, q) = model.B * Cbar;
  A_aug.bottomRightCorner(q, q) = Abar;

  Eigen::MatrixXd B_aug = Eigen::MatrixXd::Zero(4 + q, 1);
  B_aug.topRows(4) = model.B;

  Eigen::MatrixXd C_aug = Eigen::MatrixXd::Zero(2, 4 + q);
  C_aug.leftCols(4) = model.C;
  C_aug.rightCols(q) = model.D * Cbar;

  AdmissibleSet set =
      detail::stack_oinf(A_aug, B_aug, C_aug, model.D, yc, N, epsilon, model.id);
  set.variant = SetVariant::EcgAugmented;
  if (check_fd) {
    set.finite_determination_ok = detail::finite_determination_check(set);
    if (!set.finite_determination_ok)
      std::cerr << "warning: ECG O-infinity horizon N = " << N
                << " may be too short for model " << model.id << "\n";
  }
  return set;
}

/// Point membership (all row margins non-negative).
inline bool membership(const AdmissibleSet& set, const Eigen::VectorXd& point, double tol = 0.0) {
  return set.membership(point, tol);
}

inline Eigen::VectorXd row_margins(const AdmissibleSet& set, const Eigen::VectorXd& point) {
  return set.row_margins(point);
}

} // namespace rollgov
