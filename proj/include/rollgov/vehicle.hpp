#pragma once

#include <algorithm>
#include <cmath>

#include "rollgov/tire.hpp"
#include "rollgov/types.hpp"

namespace rollgov {

/// Integration options. The plant is integrated with classical RK4 at
/// dt_inner; governors sample it at the control rate.
struct SimOptions {
  double dt_inner = 1e-3;        ///< inner RK4 step [s]
  double explosion_bound = 1e3;  ///< divergence threshold on state magnitude
  bool free_speed = false;       ///< integrate longitudinal dynamics if true
};

/// Load transfer ratio. Positive means the right side carries the extra
/// load; magnitude may exceed 1 without wheel liftoff occurring.
inline double compute_ltr(const VehicleState& state, const VehicleParams& params) {
  const double ks = params.K_s * (1.0 - params.dk_ss * params.dk_ss);
  const double ds = params.D_s * (1.0 - params.dd_ss * params.dd_ss);
  return 2.0 * (ks * std::tan(state.phi) + ds * state.p * std::cos(state.phi)) /
         (params.m * kGravity * params.T);
}

namespace detail {

struct AxleForces {
  double Fy_front = 0.0; ///< front tire lateral force, tire axes [N]
  double Fy_rear = 0.0;  ///< rear tire lateral force [N]
  double Fy_total = 0.0; ///< body-frame total lateral force [N]
  double N_total = 0.0;  ///< yaw moment about CM [N m]
  double Fx_total = 0.0; ///< body-frame total longitudinal force [N]
};

inline AxleForces axle_forces(const VehicleState& state, double delta_f,
                              const VehicleParams& params, const TireParams& tire,
                              double lambda = 0.0) {
  const auto [alpha_f, alpha_r] = slip_angles(state, delta_f, params);
  const auto [Fxf, Fyf] = tire_forces(tire, params.front_axle_load(), alpha_f, lambda, params);
  const auto [Fxr, Fyr] = tire_forces(tire, params.rear_axle_load(), alpha_r, lambda, params);
  AxleForces f;
  f.Fy_front = Fyf;
  f.Fy_rear = Fyr;
  f.Fy_total = Fyf * std::cos(delta_f) + Fyr;
  f.N_total = params.l_f * Fyf * std::cos(delta_f) - params.l_r * Fyr;
  f.Fx_total = Fxf * std::cos(delta_f) - Fyf * std::sin(delta_f) + Fxr;
  return f;
}

/// Roll inertia about the undercarriage CM axis, phi-dependent.
inline double roll_inertia_eff(const VehicleParams& params, double phi) {
  return params.I_xx_SM +
         params.h_SM * params.h_SM * params.m_SM * (params.m_UC / params.m) * std::cos(phi);
}

inline double suspension_moment(const VehicleParams& params, double phi, double p) {
  const double ks = params.K_s * (1.0 - params.dk_ss * params.dk_ss);
  const double ds = params.D_s * (1.0 - params.dd_ss * params.dd_ss);
  return -ks * std::tan(phi) - ds * p * std::cos(phi) -
         params.m * kGravity * (params.dk_ss + params.dd_ss);
}

/// Inertia of the whole vehicle about the loaded wheels' contact line.
inline double pivot_inertia(const VehicleParams& params) {
  const double h_cm = params.cm_height();
  const double half = params.T / 2.0;
  return params.I_xx_SM + params.I_xx_UC + params.m * (h_cm * h_cm + half * half);
}

/// Ratio of the sprung mass's roll inertia about the contact line to the
/// whole-vehicle pivot inertia. Couples the suspension-mediated roll
/// momentum flux into the pivot while wheels are off the ground.
inline double pivot_momentum_factor(const VehicleParams& params) {
  const double h_sm = params.h_UC + params.h_SM;
  const double half = params.T / 2.0;
  const double sprung = params.I_xx_SM + params.m_SM * (h_sm * h_sm + half * half);
  return sprung / pivot_inertia(params);
}

/// Direction of an active pivot episode: sign of phi_uc, falling back to
/// p_uc and to the current LTR at the entry instant.
inline double liftoff_sign(const VehicleState& state, const VehicleParams& params) {
  if (state.phi_uc != 0.0) return state.phi_uc > 0.0 ? 1.0 : -1.0;
  if (state.p_uc != 0.0) return state.p_uc > 0.0 ? 1.0 : -1.0;
  const double ltr = compute_ltr(state, params);
  if (ltr == 0.0) return 0.0;
  return ltr > 0.0 ? 1.0 : -1.0;
}

/// Angular acceleration of the rigid-vehicle pivot about the contact line.
inline double pivot_accel(const VehicleParams& params, double phi_uc, double a_y_cm,
                          double sigma) {
  const double h_cm = params.cm_height();
  const double half = params.T / 2.0;
  const double forcing = params.m * a_y_cm * h_cm * std::cos(phi_uc);
  const double restoring =
      sigma * params.m * kGravity * (half * std::cos(phi_uc) - h_cm * std::sin(std::abs(phi_uc)));
  return (forcing - restoring) / pivot_inertia(params);
}

} // namespace detail

/// Time derivative of the plant state.
struct StateDerivative {
  double du = 0.0, dv = 0.0, dp = 0.0, dr = 0.0;
  double dphi = 0.0, dpsi = 0.0, dX = 0.0, dY = 0.0;
  double dphi_uc = 0.0, dp_uc = 0.0;
};

/// Right-hand side of the nonlinear model. While all wheels are grounded
/// this is the roll-augmented single-track model; in liftoff mode the
/// undercarriage pivot states evolve as a rigid body about the loaded
/// wheels' contact line.
inline StateDerivative derivatives(const VehicleState& state, double delta_SW,
                                   const VehicleParams& params, const TireParams& tire,
                                   bool free_speed = false) {
  if (!state.finite()) throw std::invalid_argument("derivatives: non-finite state");

  const double delta_f = params.road_wheel_angle(delta_SW);
  const auto f = detail::axle_forces(state, delta_f, params, tire);

  const double phi = state.phi;
  const double p = state.p;
  const double Ixx = detail::roll_inertia_eff(params, phi);
  const double L_T = detail::suspension_moment(params, phi, p);
  const double muc_ratio = params.m_UC / params.m;

  StateDerivative d;
  d.dp = (params.h_SM * params.m_SM *
              (f.Fy_total / params.m +
               std::sin(phi) * (kGravity + params.h_SM * muc_ratio * p * p)) +
          L_T) /
         Ixx;
  d.dr = f.N_total / params.I_zz;
  d.dv = f.Fy_total / params.m - state.u * state.r +
         (params.m_SM * params.h_SM / params.m) * (d.dp * std::cos(phi) - p * p * std::sin(phi));
  d.du = free_speed
             ? (f.Fx_total - params.m_SM * params.h_SM * p * std::cos(phi)) / params.m +
                   state.v * state.r
             : 0.0;
  d.dphi = p;
  d.dpsi = state.r;
  d.dX = state.u * std::cos(state.psi) - state.v * std::sin(state.psi);
  d.dY = state.u * std::sin(state.psi) + state.v * std::cos(state.psi);

  if (state.liftoff) {
    const double sigma = detail::liftoff_sign(state, params);
    const double a_y_cm = f.Fy_total / params.m;
    d.dphi_uc = state.p_uc;
    // lateral-acceleration forcing and gravity restoring, plus the roll
    // momentum flux the suspension feeds into the pivot while the inside
    // wheels are unloaded
    d.dp_uc = detail::pivot_accel(params, state.phi_uc, a_y_cm, sigma) -
              detail::pivot_momentum_factor(params) * d.dp;
  }
  return d;
}

/// Constraint outputs at the current instant under an applied command.
inline PlantOutput outputs(const VehicleState& state, double delta_SW,
                           const VehicleParams& params, const TireParams& tire) {
  PlantOutput out;
  out.ltr = compute_ltr(state, params);
  out.delta_SW = delta_SW;
  out.wheel_lift = params.T * std::sin(std::abs(state.phi_uc));
  const auto d = derivatives(state, delta_SW, params, tire);
  out.a_y = d.dv + state.u * state.r;
  out.beta = std::atan(state.v / state.u);
  return out;
}

namespace detail {

inline VehicleState apply(const VehicleState& s, const StateDerivative& d, double h) {
  VehicleState n = s;
  n.u += h * d.du;
  n.v += h * d.dv;
  n.p += h * d.dp;
  n.r += h * d.dr;
  n.phi += h * d.dphi;
  n.psi += h * d.dpsi;
  n.X += h * d.dX;
  n.Y += h * d.dY;
  n.phi_uc += h * d.dphi_uc;
  n.p_uc += h * d.dp_uc;
  return n;
}

inline VehicleState rk4_substep(const VehicleState& s, double delta_SW, double h,
                                const VehicleParams& params, const TireParams& tire,
                                bool free_speed) {
  const StateDerivative k1 = derivatives(s, delta_SW, params, tire, free_speed);
  const StateDerivative k2 = derivatives(apply(s, k1, h / 2.0), delta_SW, params, tire, free_speed);
  const StateDerivative k3 = derivatives(apply(s, k2, h / 2.0), delta_SW, params, tire, free_speed);
  const StateDerivative k4 = derivatives(apply(s, k3, h), delta_SW, params, tire, free_speed);

  VehicleState n = s;
  auto mix = [&](double a, double b, double c, double d4) { return (a + 2 * b + 2 * c + d4) / 6.0; };
  n.u += h * mix(k1.du, k2.du, k3.du, k4.du);
  n.v += h * mix(k1.dv, k2.dv, k3.dv, k4.dv);
  n.p += h * mix(k1.dp, k2.dp, k3.dp, k4.dp);
  n.r += h * mix(k1.dr, k2.dr, k3.dr, k4.dr);
  n.phi += h * mix(k1.dphi, k2.dphi, k3.dphi, k4.dphi);
  n.psi += h * mix(k1.dpsi, k2.dpsi, k3.dpsi, k4.dpsi);
  n.X += h * mix(k1.dX, k2.dX, k3.dX, k4.dX);
  n.Y += h * mix(k1.dY, k2.dY, k3.dY, k4.dY);
  n.phi_uc += h * mix(k1.dphi_uc, k2.dphi_uc, k3.dphi_uc, k4.dphi_uc);
  n.p_uc += h * mix(k1.dp_uc, k2.dp_uc, k3.dp_uc, k4.dp_uc);
  return n;
}

inline void check_divergence(const VehicleState& s, const SimOptions& opts) {
  const double bound = opts.explosion_bound;
  if (!s.finite() || std::abs(s.v) > bound || std::abs(s.p) > bound || std::abs(s.r) > bound ||
      std::abs(s.phi) > bound || std::abs(s.p_uc) > bound || std::abs(s.u) > 10.0 * bound)
    throw DivergenceError("plant state diverged");
  // past the pivot balance the approximation has no meaning: rolled over
  if (std::abs(s.phi_uc) >= M_PI / 2.0) throw DivergenceError("vehicle rolled over");
}

/// Handles liftoff entry and touchdown between substeps.
inline void update_mode(VehicleState& s, const VehicleParams& params, const TireParams& tire,
                        double delta_SW) {
  if (!s.liftoff) {
    const double ltr = compute_ltr(s, params);
    if (std::abs(ltr) >= 1.0) {
      // impulse-free entry: the pivot starts at rest and is spun up by the
      // momentum flux and lateral-acceleration forcing
      VehicleState probe = s;
      probe.liftoff = true;
      probe.phi_uc = 0.0;
      probe.p_uc = 0.0;
      const double sigma = ltr > 0.0 ? 1.0 : -1.0;
      const StateDerivative d = derivatives(probe, delta_SW, params, tire);
      if (d.dp_uc * sigma > 0.0) {
        s.liftoff = true;
        s.phi_uc = 0.0;
        s.p_uc = 0.0;
      }
    }
  } else {
    const double sigma = liftoff_sign(s, params);
    if (sigma == 0.0 || (sigma * s.phi_uc <= 0.0 && sigma * s.p_uc <= 0.0)) {
      s.liftoff = false;
      s.phi_uc = 0.0;
      s.p_uc = 0.0;
    }
  }
}

} // namespace detail

/// Advances the state by dt under a constant steering-wheel command, using
/// inner RK4 substeps no longer than SimOptions::dt_inner. Liftoff mode
/// transitions are resolved at substep boundaries.
inline VehicleState step(const VehicleState& state, double delta_SW, double dt,
                         const VehicleParams& params, const TireParams& tire,
                         const SimOptions& opts = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const int n_sub = std::max(1, static_cast<int>(std::ceil(dt / opts.dt_inner - 1e-12)));
  const double h = dt / n_sub;
  VehicleState s = state;
  for (int i = 0; i < n_sub; ++i) {
    s = detail::rk4_substep(s, delta_SW, h, params, tire, opts.free_speed);
    detail::check_divergence(s, opts);
    detail::update_mode(s, params, tire, delta_SW);
  }
  return s;
}

/// Owns a mutable plant state and tracks run-level extrema at substep
/// resolution (wheel lift, sprung roll, |LTR|).
class Simulator {
public:
  Simulator(const VehicleParams& params, const TireParams& tire, const SimOptions& opts = {})
      : params_(params), tire_(tire), opts_(opts) {
    params_.validate();
    tire_.validate();
  }

  void reset(const VehicleState& state) {
    state_ = state;
    max_wheel_lift_ = 0.0;
    max_sprung_roll_ = std::abs(state.phi + state.phi_uc);
    max_abs_ltr_ = std::abs(compute_ltr(state_, params_));
  }

  const VehicleState& state() const { return state_; }
  const VehicleParams& params() const { return params_; }
  const TireParams& tire() const { return tire_; }
  const SimOptions& options() const { return opts_; }

  PlantOutput current_outputs(double delta_SW) const {
    return outputs(state_, delta_SW, params_, tire_);
  }

  void advance(double delta_SW, double dt) {
    const int n_sub = std::max(1, static_cast<int>(std::ceil(dt / opts_.dt_inner - 1e-12)));
    const double h = dt / n_sub;
    for (int i = 0; i < n_sub; ++i) {
      state_ = detail::rk4_substep(state_, delta_SW, h, params_, tire_, opts_.free_speed);
      detail::check_divergence(state_, opts_);
      detail::update_mode(state_, params_, tire_, delta_SW);
      track();
    }
  }

  double max_wheel_lift() const { return max_wheel_lift_; }
  double max_sprung_roll() const { return max_sprung_roll_; }
  double max_abs_ltr() const { return max_abs_ltr_; }

private:
  void track() {
    max_wheel_lift_ = std::max(max_wheel_lift_, params_.T * std::sin(std::abs(state_.phi_uc)));
    max_sprung_roll_ = std::max(max_sprung_roll_, std::abs(state_.phi + state_.phi_uc));
    max_abs_ltr_ = std::max(max_abs_ltr_, std::abs(compute_ltr(state_, params_)));
  }

  VehicleParams params_;
  TireParams tire_;
  SimOptions opts_;
  VehicleState state_;
  double max_wheel_lift_ = 0.0;
  double max_sprung_roll_ = 0.0;
  double max_abs_ltr_ = 0.0;
};

} // namespace rollgov
