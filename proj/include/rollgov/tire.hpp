#pragma once

#include <cmath>
#include <utility>

#include "rollgov/types.hpp"

namespace rollgov {

/// Longitudinal slip ratio from wheel circumferential speed R_w*omega_w and
/// hub speed u_w. Braking normalizes by the hub speed, driving by the wheel
/// speed.
inline double slip_ratio(double wheel_speed, double hub_speed) {
  if (wheel_speed < hub_speed) return (wheel_speed - hub_speed) / hub_speed;
  return (wheel_speed - hub_speed) / wheel_speed;
}

/// Front and rear axle slip angles [rad] for a road-wheel steering angle
/// delta_f. Requires forward motion.
inline std::pair<double, double> slip_angles(const VehicleState& state, double delta_f,
                                             const VehicleParams& params) {
  if (!(state.u > 0.0)) throw std::invalid_argument("slip_angles: forward speed must be positive");
  const double alpha_f = delta_f - std::atan((state.v + params.l_f * state.r) / state.u);
  const double alpha_r = std::atan((-state.v + params.l_r * state.r) / state.u);
  return {alpha_f, alpha_r};
}

/// Peak (slip) force F_P [N] of the Magic Formula at vertical load Fz.
inline double tire_peak_force(const TireParams& tire, double Fz, const VehicleParams& params) {
  const double mg = params.m * kGravity;
  const double load = 1.5 * Fz / mg;
  return Fz * 1.0527 * tire.D / (1.0 + load * load * load);
}

/// Cornering stiffness C_alpha [N] at vertical load Fz.
inline double tire_cornering_stiffness(const TireParams& tire, double Fz,
                                       const VehicleParams& params) {
  const double mg = params.m * kGravity;
  const double c1 = tire.B * tire.C * tire.D / (4.0 * (1.0 - std::exp(-tire.c2 / 4.0)));
  return c1 * mg * (1.0 - std::exp(-tire.c2 * Fz / mg));
}

/// Combined-slip Magic Formula. Returns (Fx, Fy) in tire axes for a slip
/// state (slip ratio lambda, slip angle alpha) under vertical load Fz.
/// Zero load or zero total slip returns zero force.
inline std::pair<double, double> tire_forces(const TireParams& tire, double Fz, double slip_angle,
                                             double lambda, const VehicleParams& params) {
  if (!(Fz >= 0.0)) throw std::invalid_argument("tire_forces: Fz must be non-negative");
  if (Fz == 0.0) return {0.0, 0.0};

  const double sx = lambda;
  const double sy = std::tan(slip_angle);
  const double s_norm = std::hypot(sx, sy);
  if (s_norm < 1e-12) return {0.0, 0.0};

  const double F_P = tire_peak_force(tire, Fz, params);
  const double C_alpha = tire_cornering_stiffness(tire, Fz, params);
  const double s_c = C_alpha * s_norm / F_P;

  const double arg = (s_c / tire.C) * (1.0 - tire.E) + tire.E * std::atan(s_c / tire.C);
  const double P = std::sin(tire.C * std::atan(arg));

  const double scale = F_P * P / s_norm;
  return {scale * sx, scale * sy};
}

} // namespace rollgov
