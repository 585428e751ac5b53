#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rollgov {

/// Trapezoidal quadrature of uniformly sampled values.
inline double trapz(const std::vector<double>& y, double dt) {
  if (y.size() < 2) return 0.0;
  double acc = 0.5 * (y.front() + y.back());
  for (size_t i = 1; i + 1 < y.size(); ++i) acc += y[i];
  return acc * dt;
}

/// Wheel-lift effectiveness: 1 - max_lift / lift_limit. Negative when the
/// lift exceeds the limit; 1 exactly when no lift occurred.
inline double effectiveness(double max_lift, double lift_limit) {
  if (!(lift_limit > 0.0)) throw std::invalid_argument("effectiveness: lift limit must be positive");
  return 1.0 - max_lift / lift_limit;
}

/// Conservatism against a safe trace: integral of |ref - applied| minus
/// |ref - safe|, normalized by the integral of |ref|.
inline double conservatism(const std::vector<double>& ref, const std::vector<double>& applied,
                           const std::vector<double>& safe, double dt) {
  if (ref.size() != applied.size() || ref.size() != safe.size())
    throw std::invalid_argument("conservatism: trace length mismatch");
  std::vector<double> num(ref.size()), den(ref.size());
  for (size_t i = 0; i < ref.size(); ++i) {
    num[i] = std::abs(ref[i] - applied[i]) - std::abs(ref[i] - safe[i]);
    den[i] = std::abs(ref[i]);
  }
  const double denom = trapz(den, dt);
  if (!(denom > 0.0)) throw std::invalid_argument("conservatism: zero-reference run");
  return trapz(num, dt) / denom;
}

/// Turning response: how much less the governed turn rate deviates from the
/// driver-desired turn rate than the safe trace does. The desired turn rate
/// is yaw_gain0 * delta_ref.
inline double turning_response(const std::vector<double>& delta_ref,
                               const std::vector<double>& r_applied,
                               const std::vector<double>& r_safe, double yaw_gain0, double dt) {
  if (delta_ref.size() != r_applied.size() || delta_ref.size() != r_safe.size())
    throw std::invalid_argument("turning_response: trace length mismatch");
  std::vector<double> num(delta_ref.size()), den(delta_ref.size());
  for (size_t i = 0; i < delta_ref.size(); ++i) {
    const double r_des = yaw_gain0 * delta_ref[i];
    num[i] = std::abs(r_des - r_safe[i]) - std::abs(r_des - r_applied[i]);
    den[i] = std::abs(r_des);
  }
  const double denom = trapz(den, dt);
  if (!(denom > 0.0)) throw std::invalid_argument("turning_response: zero-reference run");
  return trapz(num, dt) / denom;
}

/// A reference safe trajectory used as a comparison branch.
struct Baseline {
  std::string name;
  std::vector<double> delta; ///< safe steering trace [rad]
  std::vector<double> r;     ///< turn-rate trace of that trajectory [rad/s]
};

struct ComputeTimeStats {
  double mean = 0.0;
  double max = 0.0;
};

/// Per-run evaluation against the comparison branches.
struct MetricsReport {
  double eta_lift = 1.0;
  std::map<std::string, double> chi_by_baseline;
  std::map<std::string, double> eta_psi_by_baseline;
  double max_wheel_lift = 0.0;
  ComputeTimeStats compute_time;
  double active_fraction = 0.0;
};

struct RunForMetrics {
  std::vector<double> ref;        ///< driver reference [rad]
  std::vector<double> applied;    ///< governed command [rad]
  std::vector<double> r;          ///< achieved turn rate [rad/s]
  std::vector<double> solve_time; ///< per-decision wall clock [s]
  double max_wheel_lift = 0.0;
  double active_fraction = 0.0;
};

inline MetricsReport evaluate_run(const RunForMetrics& run, const std::vector<Baseline>& baselines,
                                  double yaw_gain0, double dt, double lift_limit) {
  MetricsReport rep;
  rep.max_wheel_lift = run.max_wheel_lift;
  rep.eta_lift = effectiveness(run.max_wheel_lift, lift_limit);
  rep.active_fraction = run.active_fraction;
  for (const auto& base : baselines) {
    rep.chi_by_baseline[base.name] = conservatism(run.ref, run.applied, base.delta, dt);
    rep.eta_psi_by_baseline[base.name] =
        turning_response(run.ref, run.r, base.r, yaw_gain0, dt);
  }
  if (!run.solve_time.empty()) {
    double total = 0.0, worst = 0.0;
    for (double t : run.solve_time) {
      total += t;
      worst = std::max(worst, t);
    }
    rep.compute_time.mean = total / static_cast<double>(run.solve_time.size());
    rep.compute_time.max = worst;
  }
  return rep;
}

} // namespace rollgov
