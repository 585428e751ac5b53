#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "rollgov/admissible_set.hpp"
#include "rollgov/laguerre.hpp"
#include "rollgov/linearization.hpp"
#include "rollgov/qp.hpp"
#include "rollgov/vehicle.hpp"

namespace rollgov {

enum class RecoveryKind { None, LastCommand, Contraction, RowRemoval, Relaxation };

inline const char* to_string(RecoveryKind r) {
  switch (r) {
    case RecoveryKind::None: return "none";
    case RecoveryKind::LastCommand: return "last_command";
    case RecoveryKind::Contraction: return "contraction";
    case RecoveryKind::RowRemoval: return "row_removal";
    case RecoveryKind::Relaxation: return "relaxation";
  }
  return "none";
}

inline RecoveryKind recovery_from_string(const std::string& s) {
  if (s == "none") return RecoveryKind::None;
  if (s == "last_command") return RecoveryKind::LastCommand;
  if (s == "contraction") return RecoveryKind::Contraction;
  if (s == "row_removal") return RecoveryKind::RowRemoval;
  if (s == "relaxation") return RecoveryKind::Relaxation;
  throw std::invalid_argument("unknown recovery kind: " + s);
}

/// One governor update: the applied command plus diagnostics.
struct GovernorDecision {
  double v = 0.0;
  bool active = false;
  int feasibility_level = 1;
  RecoveryKind recovery_used = RecoveryKind::None;
  int rows_removed = 0;
  double relax_epsilon = 0.0;
  double solve_time = 0.0;
};

/// Row-interval evidence for a gain search: each admissible-set row
/// constrains slope * k <= residual.
struct FeasibilityAnalysis {
  bool feasible = false;
  int level = 1;
  double k_lo = 0.0;     ///< global lower bound on k (before [0,1] clipping)
  double k_hi = 1.0;     ///< global upper bound on k
  bool dead_rows = false; ///< rows unsatisfiable for any gain
};

/// Classifies the feasibility evidence per the seven-level scheme: 1 when a
/// gain in [0,1] satisfies every row; -1/-2 when the admissible interval
/// lies wholly above 1 / below 0; -3 when rows demand incompatible gains;
/// 0 and -4/-5/-6 when unsatisfiable rows (current output breaching) occur
/// alone or together with the -1/-2/-3 evidence.
inline FeasibilityAnalysis classify_feasibility(const Eigen::VectorXd& slope,
                                                const Eigen::VectorXd& residual) {
  constexpr double kSlopeTol = 1e-14;
  FeasibilityAnalysis out;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool dead = false;
  for (Eigen::Index i = 0; i < slope.size(); ++i) {
    const double s = slope(i), m = residual(i);
    if (std::abs(s) <= kSlopeTol) {
      if (m < -1e-12) dead = true;
    } else if (s > 0.0) {
      hi = std::min(hi, m / s);
    } else {
      lo = std::max(lo, m / s);
    }
  }
  out.k_lo = lo;
  out.k_hi = hi;
  out.dead_rows = dead;
  out.feasible = !dead && std::max(lo, 0.0) <= std::min(hi, 1.0);
  if (out.feasible) {
    out.level = 1;
    return out;
  }
  int dir = 0;
  if (lo <= hi) {
    if (lo > 1.0) dir = -1;
    else if (hi < 0.0) dir = -2;
  } else {
    dir = -3;
  }
  if (!dead) out.level = dir;
  else out.level = (dir == 0) ? 0 : dir - 3; // -1/-2/-3 co-occurring -> -4/-5/-6
  return out;
}

/// Precomputed per-step row data of the LRG optimization: command-column
/// coefficients and margins with the state (and disturbance) contribution
/// folded in. Commands are handled in absolute terms; cmd_offset maps them
/// into the set's deviation coordinates.
struct LrgRowProblem {
  Eigen::VectorXd a_u;      ///< command column of A_O
  Eigen::VectorXd margins0; ///< b_O - A_x dx - A_d d
  Eigen::VectorXd b;        ///< b_O, for relaxation scaling
  int block_rows = 4;
  int horizon = 0;
  double cmd_offset = 0.0;  ///< sigma * delta0 of the selected model

  LrgRowProblem() = default;

  LrgRowProblem(const AdmissibleSet& set, const Eigen::VectorXd& dx, const Eigen::VectorXd& d,
                double offset, const Eigen::VectorXd& y_offset = Eigen::VectorXd())
      : a_u(set.A_O.col(0)),
        margins0(set.b_O - set.A_O.middleCols(set.n_cmd, set.n_state) * dx),
        b(set.b_O),
        block_rows(set.block_rows),
        horizon(set.horizon),
        cmd_offset(offset) {
    if (set.n_dist > 0) {
      if (d.size() != set.n_dist) throw std::invalid_argument("LrgRowProblem: disturbance size");
      margins0 -= set.A_O.rightCols(set.n_dist) * d;
    }
    if (y_offset.size() > 0) set.fold_output_offset(margins0, y_offset);
  }

  /// Gain-interval evidence for v = prev_v + k (ref - prev_v), optionally
  /// skipping the first removed_rows rows and inflating b by relax.
  FeasibilityAnalysis analyze(double prev_v, double ref, int removed_rows = 0,
                              double relax = 0.0) const {
    const int nr = static_cast<int>(a_u.size()) - removed_rows;
    const Eigen::VectorXd slope = a_u.tail(nr) * (ref - prev_v);
    Eigen::VectorXd residual =
        margins0.tail(nr) - a_u.tail(nr) * (prev_v - cmd_offset);
    if (relax != 0.0) residual += relax * b.tail(nr);
    return classify_feasibility(slope, residual);
  }

  /// Feasible interval of the absolute command, or nullopt when empty.
  std::optional<std::pair<double, double>> feasible_command_interval(int removed_rows = 0,
                                                                     double relax = 0.0) const {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = removed_rows; i < a_u.size(); ++i) {
      double m = margins0(i) + a_u(i) * cmd_offset;
      if (relax != 0.0) m += relax * b(i);
      const double a = a_u(i);
      if (std::abs(a) <= 1e-14) {
        if (m < -1e-12) return std::nullopt;
      } else if (a > 0.0) {
        hi = std::min(hi, m / a);
      } else {
        lo = std::max(lo, m / a);
      }
    }
    if (lo > hi) return std::nullopt;
    return std::make_pair(lo, hi);
  }

  /// Maximal-gain command for a feasible analysis. Bit-exact pass-through
  /// when the full gain is admissible.
  double command_at_max_gain(const FeasibilityAnalysis& fa, double prev_v, double ref) const {
    const double k = std::max(std::min(fa.k_hi, 1.0), std::max(fa.k_lo, 0.0));
    if (k >= 1.0) return ref;
    if (k <= 0.0) return prev_v;
    return prev_v + k * (ref - prev_v);
  }
};

/// Holds the last successfully applied command.
inline double recover_last_command(double prev_v) { return prev_v; }

/// Command contraction: search domain per the sign cases (both positive ->
/// [0, max]; both negative -> [min, 0]; otherwise the prev-to-ref span) for
/// the feasible command closest to the reference. Falls back to the last
/// command when the domain is entirely infeasible.
inline std::pair<double, RecoveryKind> recover_contraction(const LrgRowProblem& rows,
                                                           double prev_v, double ref) {
  double s_lo, s_hi;
  if (prev_v > 0.0 && ref > 0.0) {
    s_lo = 0.0;
    s_hi = std::max(prev_v, ref);
  } else if (prev_v < 0.0 && ref < 0.0) {
    s_lo = std::min(prev_v, ref);
    s_hi = 0.0;
  } else {
    s_lo = std::min(prev_v, ref);
    s_hi = std::max(prev_v, ref);
  }
  const auto interval = rows.feasible_command_interval();
  if (interval) {
    const double lo = std::max(s_lo, interval->first);
    const double hi = std::min(s_hi, interval->second);
    if (lo <= hi) return {std::clamp(ref, lo, hi), RecoveryKind::Contraction};
  }
  return {recover_last_command(prev_v), RecoveryKind::LastCommand};
}

/// Temporal row removal (leading prediction blocks dropped until the gain
/// computation succeeds; the steady-state block is never dropped).
struct RowRemovalResult {
  double v = 0.0;
  int rows_removed = 0;
  RecoveryKind used = RecoveryKind::RowRemoval;
};

inline RowRemovalResult recover_row_removal(const LrgRowProblem& rows, double prev_v, double ref) {
  RowRemovalResult out;
  const int max_blocks = rows.horizon + 1; // prediction blocks k = 0..N
  for (int i = 1; i <= max_blocks; ++i) {
    const int removed = i * rows.block_rows;
    const auto fa = rows.analyze(prev_v, ref, removed);
    if (fa.feasible) {
      out.v = rows.command_at_max_gain(fa, prev_v, ref);
      out.rows_removed = removed;
      return out;
    }
  }
  out.v = recover_last_command(prev_v);
  out.rows_removed = max_blocks * rows.block_rows;
  out.used = RecoveryKind::LastCommand;
  return out;
}

/// Constraint relaxation b' = (1 + eps) b: eps doubles from 1e-3 until the
/// computation succeeds, then bisection pins the minimal feasible eps to
/// 1e-4 relative.
struct RelaxationResult {
  double v = 0.0;
  double relax_epsilon = 0.0;
  RecoveryKind used = RecoveryKind::Relaxation;
};

inline RelaxationResult recover_relaxation(const LrgRowProblem& rows, double prev_v, double ref) {
  RelaxationResult out;
  double eps = 1e-3;
  double last_fail = 0.0;
  bool found = false;
  for (int i = 0; i < 40; ++i) {
    if (rows.analyze(prev_v, ref, 0, eps).feasible) {
      found = true;
      break;
    }
    last_fail = eps;
    eps *= 2.0;
  }
  if (!found) {
    out.v = recover_last_command(prev_v);
    out.used = RecoveryKind::LastCommand;
    return out;
  }
  double lo = last_fail, hi = eps;
  for (int i = 0; i < 20 && (hi - lo) > 1e-4 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (rows.analyze(prev_v, ref, 0, mid).feasible) hi = mid;
    else lo = mid;
  }
  const auto fa = rows.analyze(prev_v, ref, 0, hi);
  out.v = rows.command_at_max_gain(fa, prev_v, ref);
  out.relax_epsilon = hi;
  return out;
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Mirror sign for nearest-|delta| model selection: operating points are
/// non-negative; negative commands use the sign-conjugated trim.
inline double mirror_sign(double delta_now, double ref) {
  if (delta_now != 0.0) return delta_now > 0.0 ? 1.0 : -1.0;
  if (ref != 0.0) return ref > 0.0 ? 1.0 : -1.0;
  return 1.0;
}

} // namespace detail

struct LrgOptions {
  RecoveryKind recovery = RecoveryKind::Contraction;
  bool nonlinear_difference = true;
};

/// Linear reference governor: exact interval optimization of the gain over
/// the selected O-infinity set, with nonlinear-difference compensation and
/// a configurable feasibility-recovery strategy.
class LrgGovernor {
public:
  LrgGovernor(MplBank bank, std::vector<AdmissibleSet> sets, LrgOptions opts = {})
      : bank_(std::move(bank)), sets_(std::move(sets)), opts_(opts) {
    if (bank_.models.size() != sets_.size())
      throw std::invalid_argument("LrgGovernor: one set per bank model required");
    for (const auto& s : sets_) {
      const bool want_dist = opts_.nonlinear_difference;
      if (want_dist && s.variant != SetVariant::DisturbanceAugmented)
        throw std::invalid_argument("LrgGovernor: disturbance-augmented sets required");
      if (!want_dist && s.variant != SetVariant::Plain)
        throw std::invalid_argument("LrgGovernor: plain sets required");
    }
  }

  void reset(double v0 = 0.0) { prev_v_ = v0; }
  double prev_command() const { return prev_v_; }

  /// One update at the control rate. x is the measured state (v, r, p, phi);
  /// y_meas the measured (LTR, delta_SW) used for the nonlinear difference.
  GovernorDecision step(double ref, const Eigen::Vector4d& x, const Eigen::Vector2d& y_meas) {
    const auto t0 = detail::Clock::now();
    const size_t idx = bank_.select_index(prev_v_);
    const LinearModel& model = bank_.models[idx];
    const AdmissibleSet& set = sets_[idx];
    const double sigma = detail::mirror_sign(prev_v_, ref);

    const Eigen::Vector4d dx = x - sigma * model.x0;
    const Eigen::Vector2d y_offset = sigma * model.y0;
    Eigen::VectorXd d(0);
    if (opts_.nonlinear_difference) {
      const double dv_prev = prev_v_ - sigma * model.delta0;
      d = y_meas - (model.C * dx + model.D * dv_prev + y_offset);
    }
    const LrgRowProblem rows(set, dx, d, sigma * model.delta0, y_offset);

    GovernorDecision dec;
    const auto fa = rows.analyze(prev_v_, ref);
    dec.feasibility_level = fa.level;
    if (fa.feasible) {
      dec.v = rows.command_at_max_gain(fa, prev_v_, ref);
    } else {
      switch (opts_.recovery) {
        case RecoveryKind::None:
        case RecoveryKind::LastCommand:
          dec.v = recover_last_command(prev_v_);
          dec.recovery_used = RecoveryKind::LastCommand;
          break;
        case RecoveryKind::Contraction: {
          const auto [v, used] = recover_contraction(rows, prev_v_, ref);
          dec.v = v;
          dec.recovery_used = used;
          break;
        }
        case RecoveryKind::RowRemoval: {
          const auto rr = recover_row_removal(rows, prev_v_, ref);
          dec.v = rr.v;
          dec.rows_removed = rr.rows_removed;
          dec.recovery_used = rr.used;
          break;
        }
        case RecoveryKind::Relaxation: {
          const auto rx = recover_relaxation(rows, prev_v_, ref);
          dec.v = rx.v;
          dec.relax_epsilon = rx.relax_epsilon;
          dec.recovery_used = rx.used;
          break;
        }
      }
    }
    dec.active = (dec.v != ref);
    prev_v_ = dec.v;
    dec.solve_time = detail::elapsed_seconds(t0);
    return dec;
  }

  const MplBank& bank() const { return bank_; }
  const std::vector<AdmissibleSet>& sets() const { return sets_; }

private:
  MplBank bank_;
  std::vector<AdmissibleSet> sets_;
  LrgOptions opts_;
  double prev_v_ = 0.0;
};

/// Extended command governor: event-triggered Laguerre-sequence QP. Safe
/// references pass through and reset the virtual state; unsafe references
/// trigger the QP over (xbar, rho) against the ECG-augmented set.
class EcgGovernor {
public:
  /// The safety test normally runs on the disturbance-augmented sets with
  /// the measured output folded in, mirroring the LRG's nonlinear-difference
  /// compensation; pass plain sets to disable that anchoring.
  EcgGovernor(MplBank bank, std::vector<AdmissibleSet> safety_sets,
              std::vector<AdmissibleSet> ecg_sets, LaguerreBasis basis, EcgWeights weights)
      : bank_(std::move(bank)),
        safety_sets_(std::move(safety_sets)),
        ecg_sets_(std::move(ecg_sets)),
        basis_(basis),
        weights_(std::move(weights)),
        Abar_(basis_.Abar()),
        Cbar_(basis_.Cbar()),
        xbar_(Eigen::VectorXd::Zero(basis_.depth)) {
    if (bank_.models.size() != safety_sets_.size() || bank_.models.size() != ecg_sets_.size())
      throw std::invalid_argument("EcgGovernor: one safety and one ECG set per bank model");
    for (const auto& s : safety_sets_)
      if (s.variant == SetVariant::EcgAugmented)
        throw std::invalid_argument("EcgGovernor: safety sets must be plain or disturbance sets");
    for (const auto& s : ecg_sets_)
      if (s.variant != SetVariant::EcgAugmented)
        throw std::invalid_argument("EcgGovernor: ECG-augmented sets required");
  }

  void reset(double v0 = 0.0) {
    prev_v_ = v0;
    rho_abs_ = v0;
    xbar_.setZero();
    qp_invocations_ = 0;
  }

  double prev_command() const { return prev_v_; }
  int qp_invocations() const { return qp_invocations_; }

  GovernorDecision step(double ref, const Eigen::Vector4d& x,
                        const Eigen::Vector2d& y_meas = Eigen::Vector2d::Zero()) {
    const auto t0 = detail::Clock::now();
    const size_t idx = bank_.select_index(prev_v_);
    const LinearModel& model = bank_.models[idx];
    const double sigma = detail::mirror_sign(prev_v_, ref);
    const Eigen::Vector4d dx = x - sigma * model.x0;

    GovernorDecision dec;
    const Eigen::Vector2d y_offset = sigma * model.y0;
    const AdmissibleSet& safety = safety_sets_[idx];
    Eigen::VectorXd probe(safety.cols());
    if (safety.n_dist > 0) {
      const double dv_prev = prev_v_ - sigma * model.delta0;
      const Eigen::Vector2d d = y_meas - (model.C * dx + model.D * dv_prev + y_offset);
      probe << ref - sigma * model.delta0, dx, d;
    } else {
      probe << ref - sigma * model.delta0, dx;
    }
    if (safety.membership(probe, y_offset, 0.0)) {
      dec.v = ref;
      dec.active = false;
      xbar_.setZero();
      rho_abs_ = ref;
      prev_v_ = ref;
      dec.solve_time = detail::elapsed_seconds(t0);
      return dec;
    }

    ++qp_invocations_;
    const AdmissibleSet& eset = ecg_sets_[idx];
    const int q = basis_.depth;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(q + 1, q + 1);
    H.topLeftCorner(q, q) = weights_.P;
    H(q, q) = weights_.k_L;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(q + 1);
    f(q) = -weights_.k_L * (ref - sigma * model.delta0);

    // set columns are (rho, x, xbar); QP variables are (xbar, rho)
    Eigen::MatrixXd A_ineq(eset.rows(), q + 1);
    A_ineq.leftCols(q) = eset.A_O.rightCols(q);
    A_ineq.col(q) = eset.A_O.col(0);
    Eigen::VectorXd b_ineq = eset.b_O - eset.A_O.middleCols(1, 4) * dx;
    eset.fold_output_offset(b_ineq, y_offset);

    const QpResult qp = solve_qp(H, f, A_ineq, b_ineq);
    if (qp.status == QpStatus::Optimal) {
      xbar_ = qp.x.head(q);
      rho_abs_ = sigma * model.delta0 + qp.x(q);
      dec.v = Cbar_.dot(xbar_) + rho_abs_;
    } else {
      // hold the last successful command sequence
      xbar_ = Abar_ * xbar_;
      dec.v = Cbar_.dot(xbar_) + rho_abs_;
      dec.recovery_used = RecoveryKind::LastCommand;
      dec.feasibility_level = 0;
    }
    dec.active = (dec.v != ref);
    prev_v_ = dec.v;
    dec.solve_time = detail::elapsed_seconds(t0);
    return dec;
  }

private:
  MplBank bank_;
  std::vector<AdmissibleSet> safety_sets_;
  std::vector<AdmissibleSet> ecg_sets_;
  LaguerreBasis basis_;
  EcgWeights weights_;
  Eigen::MatrixXd Abar_;
  Eigen::RowVectorXd Cbar_;
  Eigen::VectorXd xbar_;
  double rho_abs_ = 0.0;
  double prev_v_ = 0.0;
  int qp_invocations_ = 0;
};

struct NrgOptions {
  int iters = 4;           ///< nonlinear predictions per update (>= 1)
  double horizon = 1.0;    ///< prediction span [s]
  double control_dt = 0.01;
};

/// Nonlinear reference governor: forward simulation of the plant under a
/// constant candidate command; bisection between the last safe command and
/// the reference, keeping the safe endpoint.
class NrgGovernor {
public:
  NrgGovernor(const VehicleParams& params, const TireParams& tire, const OutputConstraints& yc,
              NrgOptions opts = {}, SimOptions sim_opts = {})
      : params_(params), tire_(tire), yc_(yc), opts_(opts), sim_opts_(sim_opts) {
    if (opts_.iters < 1) throw std::invalid_argument("NrgGovernor: iters must be >= 1");
  }

  void reset(double v0 = 0.0) { prev_v_ = v0; }
  double prev_command() const { return prev_v_; }

  /// True when holding cmd from the given state keeps the outputs inside
  /// the constraints over the prediction horizon.
  bool command_safe(double cmd, const VehicleState& from) const {
    if (std::abs(cmd) > yc_.delta_sw_lim) return false;
    if (std::abs(compute_ltr(from, params_)) > yc_.ltr_lim) return false;
    VehicleState s = from;
    const int n = static_cast<int>(std::lround(opts_.horizon / opts_.control_dt));
    for (int k = 0; k < n; ++k) {
      try {
        s = rollgov::step(s, cmd, opts_.control_dt, params_, tire_, sim_opts_);
      } catch (const DivergenceError&) {
        return false;
      }
      if (std::abs(compute_ltr(s, params_)) > yc_.ltr_lim) return false;
    }
    return true;
  }

  GovernorDecision step(double ref, const VehicleState& measured) {
    const auto t0 = detail::Clock::now();
    GovernorDecision dec;
    if (command_safe(ref, measured)) {
      dec.v = ref;
      dec.active = false;
      prev_v_ = ref;
      dec.solve_time = detail::elapsed_seconds(t0);
      return dec;
    }
    // bisect on the span from the last safe command toward the reference
    double t_lo = 0.0, t_hi = 1.0;
    for (int it = 1; it < opts_.iters; ++it) {
      const double t = 0.5 * (t_lo + t_hi);
      const double cand = prev_v_ + t * (ref - prev_v_);
      if (command_safe(cand, measured)) t_lo = t;
      else t_hi = t;
    }
    dec.v = (t_lo == 0.0) ? prev_v_ : prev_v_ + t_lo * (ref - prev_v_);
    dec.feasibility_level = (t_lo > 0.0) ? 1 : 0;
    if (t_lo == 0.0) dec.recovery_used = RecoveryKind::LastCommand;
    dec.active = (dec.v != ref);
    prev_v_ = dec.v;
    dec.solve_time = detail::elapsed_seconds(t0);
    return dec;
  }

private:
  VehicleParams params_;
  TireParams tire_;
  OutputConstraints yc_;
  NrgOptions opts_;
  SimOptions sim_opts_;
  double prev_v_ = 0.0;
};

} // namespace rollgov
