#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rollgov/vehicle.hpp"

namespace rollgov {

/// Linearization of the plant about a steady turn. State order is
/// (v, r, p, phi); input is the steering-wheel angle deviation; outputs are
/// (LTR, delta_SW) deviations.
struct LinearModel {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Vector4d B = Eigen::Vector4d::Zero();
  Eigen::Matrix<double, 2, 4> C = Eigen::Matrix<double, 2, 4>::Zero();
  Eigen::Vector2d D = Eigen::Vector2d::Zero();
  Eigen::Vector4d x0 = Eigen::Vector4d::Zero(); ///< trim state (v, r, p, phi)
  double delta0 = 0.0;                          ///< trim steering-wheel angle [rad]
  Eigen::Vector2d y0 = Eigen::Vector2d::Zero(); ///< trim output (LTR, delta_SW)
  double u0 = 0.0;                              ///< forward speed [m/s]
  double dt = 0.0;                              ///< sample time [s], 0 when continuous
  bool discrete = false;
  std::string id;

  /// Spectral radius of A.
  double spectral_radius() const {
    return Eigen::EigenSolver<Eigen::Matrix4d>(A, false).eigenvalues().cwiseAbs().maxCoeff();
  }
  bool schur() const { return discrete && spectral_radius() < 1.0; }
};

namespace detail {

/// Steady-turn residual (vdot, rdot, pdot) at p = 0 for fixed u0, delta_SW.
inline Eigen::Vector3d trim_residual(const Eigen::Vector3d& z, double u0, double delta_SW,
                                     const VehicleParams& params, const TireParams& tire) {
  VehicleState s;
  s.u = u0;
  s.v = z(0);
  s.r = z(1);
  s.p = 0.0;
  s.phi = z(2);
  const StateDerivative d = derivatives(s, delta_SW, params, tire);
  return {d.dv, d.dr, d.dp};
}

inline std::optional<Eigen::Vector3d> trim_newton(Eigen::Vector3d z, double u0, double delta_SW,
                                                  const VehicleParams& params,
                                                  const TireParams& tire) {
  constexpr double kTol = 1e-9;
  for (int it = 0; it < 80; ++it) {
    const Eigen::Vector3d R = trim_residual(z, u0, delta_SW, params, tire);
    if (R.norm() < kTol) return z;

    Eigen::Matrix3d J;
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d zp = z, zm = z;
      zp(j) += h;
      zm(j) -= h;
      J.col(j) = (trim_residual(zp, u0, delta_SW, params, tire) -
                  trim_residual(zm, u0, delta_SW, params, tire)) /
                 (2.0 * h);
    }
    const Eigen::Vector3d dz = J.fullPivLu().solve(-R);
    if (!dz.allFinite()) return std::nullopt;

    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= 1e-4) {
      const Eigen::Vector3d cand = z + lambda * dz;
      if (trim_residual(cand, u0, delta_SW, params, tire).norm() <
          (1.0 - 0.25 * lambda) * R.norm()) {
        z = cand;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  if (trim_residual(z, u0, delta_SW, params, tire).norm() < 1e-7) return z;
  return std::nullopt;
}

/// Central-difference partials of the composed axle forces at the trim.
struct TirePartials {
  double T_v, T_r, T_d; ///< dF_yT/d{v, r, delta_f}
  double N_v, N_r, N_d; ///< dN_T/d{v, r, delta_f}
};

inline TirePartials tire_partials(const VehicleState& s0, double delta_f,
                                  const VehicleParams& params, const TireParams& tire,
                                  double h = 1e-6) {
  auto forces = [&](double dv, double dr, double dd) {
    VehicleState s = s0;
    s.v += dv;
    s.r += dr;
    return axle_forces(s, delta_f + dd, params, tire);
  };
  TirePartials p{};
  {
    const auto fp = forces(h, 0, 0), fm = forces(-h, 0, 0);
    p.T_v = (fp.Fy_total - fm.Fy_total) / (2 * h);
    p.N_v = (fp.N_total - fm.N_total) / (2 * h);
  }
  {
    const auto fp = forces(0, h, 0), fm = forces(0, -h, 0);
    p.T_r = (fp.Fy_total - fm.Fy_total) / (2 * h);
    p.N_r = (fp.N_total - fm.N_total) / (2 * h);
  }
  {
    const auto fp = forces(0, 0, h), fm = forces(0, 0, -h);
    p.T_d = (fp.Fy_total - fm.Fy_total) / (2 * h);
    p.N_d = (fp.N_total - fm.N_total) / (2 * h);
  }
  return p;
}

} // namespace detail

/// Finds the steady turn (v, r, phi) at speed u0 and steering-wheel angle
/// delta0, by damped Newton with continuation in the steering angle.
inline Eigen::Vector3d solve_trim(const VehicleParams& params, const TireParams& tire, double u0,
                                  double delta0) {
  Eigen::Vector3d z = Eigen::Vector3d::Zero();
  const double step = deg2rad(10.0);
  const int n_stage = std::max(1, static_cast<int>(std::ceil(std::abs(delta0) / step)));
  auto fail = [&]() {
    throw TrimNotFound("no steady turn at delta_SW = " + std::to_string(rad2deg(delta0)) +
                       " deg, u0 = " + std::to_string(u0) + " m/s");
  };
  for (int i = 1; i <= n_stage; ++i) {
    const double d = delta0 * static_cast<double>(i) / n_stage;
    auto sol = detail::trim_newton(z, u0, d, params, tire);
    if (!sol) fail();
    z = *sol;
  }
  // reject post-peak drift equilibria outside the tire model's slip range
  VehicleState s;
  s.u = u0;
  s.v = z(0);
  s.r = z(1);
  s.phi = z(2);
  const auto [alpha_f, alpha_r] = slip_angles(s, params.road_wheel_angle(delta0), params);
  if (std::abs(alpha_f) > deg2rad(30.0) || std::abs(alpha_r) > deg2rad(30.0)) fail();
  return z;
}

/// Continuous-time linearization at the steady turn (u0, delta0). Tire-force
/// partials are evaluated by central differences on the Magic Formula; the
/// remaining partials are closed-form.
inline LinearModel linearize(const VehicleParams& params, const TireParams& tire, double u0,
                             double delta0) {
  const Eigen::Vector3d z = solve_trim(params, tire, u0, delta0);
  const double v0 = z(0), r0 = z(1), phi0 = z(2), p0 = 0.0;

  VehicleState s0;
  s0.u = u0;
  s0.v = v0;
  s0.r = r0;
  s0.p = p0;
  s0.phi = phi0;

  const double delta_f = params.road_wheel_angle(delta0);
  const auto tp = detail::tire_partials(s0, delta_f, params, tire);

  const double m = params.m;
  const double h = params.h_SM;
  const double msm = params.m_SM;
  const double mu = params.m_UC / m;
  const double ks = params.K_s * (1.0 - params.dk_ss * params.dk_ss);
  const double ds = params.D_s * (1.0 - params.dd_ss * params.dd_ss);

  const double cphi = std::cos(phi0), sphi = std::sin(phi0);
  const double Ixx = detail::roll_inertia_eff(params, phi0);
  const double dIxx_dphi = -h * h * msm * mu * sphi;
  const double hp = msm * h / m;        // h'_SM
  const double gp = h * msm / (m * Ixx); // dpdot/dF_yT

  const auto f0 = detail::axle_forces(s0, delta_f, params, tire);
  const double Nm0 = h * msm * (f0.Fy_total / m + sphi * (kGravity + h * mu * p0 * p0)) +
                     detail::suspension_moment(params, phi0, p0);
  const double pdot0 = Nm0 / Ixx;

  const double dpdot_dv = gp * tp.T_v;
  const double dpdot_dr = gp * tp.T_r;
  const double dpdot_dd = gp * tp.T_d;
  const double dpdot_dp = (h * msm * 2.0 * h * mu * p0 * sphi - ds * cphi) / Ixx;
  const double dLT_dphi = -ks * (1.0 + std::tan(phi0) * std::tan(phi0)) + ds * p0 * sphi;
  const double dpdot_dphi =
      (h * msm * cphi * (kGravity + h * mu * p0 * p0) + dLT_dphi) / Ixx -
      pdot0 * dIxx_dphi / Ixx;

  const double inv_mprime = 1.0 / m + hp * gp * cphi; // 1/m' of the linear model

  LinearModel mod;
  mod.A(0, 0) = tp.T_v * inv_mprime;
  mod.A(0, 1) = tp.T_r * inv_mprime - u0;
  mod.A(0, 2) = hp * (cphi * dpdot_dp - 2.0 * p0 * sphi);
  mod.A(0, 3) = hp * (cphi * dpdot_dphi - pdot0 * sphi - p0 * p0 * cphi);
  mod.A(1, 0) = tp.N_v / params.I_zz;
  mod.A(1, 1) = tp.N_r / params.I_zz;
  mod.A(2, 0) = dpdot_dv;
  mod.A(2, 1) = dpdot_dr;
  mod.A(2, 2) = dpdot_dp;
  mod.A(2, 3) = dpdot_dphi;
  mod.A(3, 2) = 1.0;

  const double fold = 1.0 / params.k_deltaSW; // steering wheel to road wheel
  mod.B(0) = tp.T_d * inv_mprime * fold;
  mod.B(1) = tp.N_d / params.I_zz * fold;
  mod.B(2) = dpdot_dd * fold;
  mod.B(3) = 0.0;

  const double mgT = m * kGravity * params.T;
  mod.C(0, 2) = 2.0 * ds * cphi / mgT;
  mod.C(0, 3) = 2.0 * (ks * (1.0 + std::tan(phi0) * std::tan(phi0)) - ds * p0 * sphi) / mgT;
  mod.D(1) = 1.0;

  mod.x0 << v0, r0, p0, phi0;
  mod.delta0 = delta0;
  mod.y0 << compute_ltr(s0, params), delta0;
  mod.u0 = u0;
  mod.id = "lin@" + std::to_string(rad2deg(delta0)) + "deg";
  return mod;
}

/// Exact zero-order-hold discretization via the matrix exponential of the
/// augmented [A B; 0 0] block.
inline LinearModel discretize(const LinearModel& model, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("discretize: dt must be positive");
  if (model.discrete) throw std::invalid_argument("discretize: model already discrete");
  Eigen::Matrix<double, 5, 5> M = Eigen::Matrix<double, 5, 5>::Zero();
  M.topLeftCorner<4, 4>() = model.A;
  M.topRightCorner<4, 1>() = model.B;
  const Eigen::Matrix<double, 5, 5> phi = (M * dt).exp();

  LinearModel out = model;
  out.A = phi.topLeftCorner<4, 4>();
  out.B = phi.topRightCorner<4, 1>();
  out.dt = dt;
  out.discrete = true;
  return out;
}

/// Bank of discrete linearizations at increasing steering operating points,
/// switched by nearest current |steering angle|.
struct MplBank {
  std::vector<LinearModel> models;

  void validate() const {
    if (models.empty()) throw std::invalid_argument("MplBank: empty");
    if (models.front().delta0 != 0.0) throw std::invalid_argument("MplBank: first point must be 0");
    for (size_t i = 0; i + 1 < models.size(); ++i)
      if (!(models[i].delta0 < models[i + 1].delta0))
        throw std::invalid_argument("MplBank: operating points must be strictly increasing");
    for (const auto& m : models)
      if (!m.schur()) throw std::invalid_argument("MplBank: model at " + m.id + " is not Schur");
  }

  size_t select_index(double delta_now) const {
    const double target = std::abs(delta_now);
    size_t best = 0;
    double best_dist = std::abs(target - models[0].delta0);
    for (size_t i = 1; i < models.size(); ++i) {
      const double dist = std::abs(target - models[i].delta0);
      if (dist < best_dist) { // ties keep the smaller operating point
        best = i;
        best_dist = dist;
      }
    }
    return best;
  }
};

/// Preset RGMPL1/2/3 operating-point selections, in degrees.
inline std::vector<double> mpl_points_deg(int selection) {
  switch (selection) {
    case 1: return {0, 20, 40, 100};
    case 2: return {0, 80, 110, 150};
    case 3: return {0, 20, 40, 60, 80, 100, 120, 130, 140, 150};
    default: throw std::invalid_argument("mpl_points_deg: selection must be 1, 2 or 3");
  }
}

/// Builds a discrete-time MPL bank. Operating points whose trim cannot be
/// found are skipped with a warning; the zero point must succeed.
inline MplBank build_mpl_bank(const VehicleParams& params, const TireParams& tire, double u0,
                              const std::vector<double>& points_rad, double dt) {
  MplBank bank;
  for (double d0 : points_rad) {
    try {
      bank.models.push_back(discretize(linearize(params, tire, u0, d0), dt));
    } catch (const TrimNotFound& e) {
      if (d0 == 0.0) throw;
      std::cerr << "warning: skipping MPL point " << rad2deg(d0) << " deg: " << e.what() << "\n";
    }
  }
  bank.validate();
  return bank;
}

/// Nearest-point model selection on the current steering angle.
inline const LinearModel& select_model(const MplBank& bank, double delta_now) {
  if (bank.models.empty()) throw std::invalid_argument("select_model: empty bank");
  return bank.models[bank.select_index(delta_now)];
}

} // namespace rollgov
