#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rollgov {

inline constexpr const char* kVersion = "0.1.0";

/// Gravitational acceleration [m/s^2].
inline constexpr double kGravity = 9.81;

inline constexpr double deg2rad(double deg) { return deg * M_PI / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / M_PI; }

/// Road surface condition selecting a Magic Formula parameter set.
enum class Surface { Dry, Wet, Snow, Ice };

inline const char* to_string(Surface s) {
  switch (s) {
    case Surface::Dry: return "dry";
    case Surface::Wet: return "wet";
    case Surface::Snow: return "snow";
    case Surface::Ice: return "ice";
  }
  return "dry";
}

inline Surface surface_from_string(const std::string& s) {
  if (s == "dry") return Surface::Dry;
  if (s == "wet") return Surface::Wet;
  if (s == "snow") return Surface::Snow;
  if (s == "ice") return Surface::Ice;
  throw std::invalid_argument("unknown surface: " + s);
}

/// Magic Formula tire parameters (shape factors plus the vertical-load
/// sensitivity exponent c2).
struct TireParams {
  double B = 7.15;
  double C = 2.30;
  double D = 0.87;
  double E = 1.00;
  double c2 = 1.54;
  Surface surface = Surface::Dry;

  void validate() const {
    if (!(B > 0.0 && C > 0.0 && D > 0.0 && c2 > 0.0))
      throw std::invalid_argument("TireParams: B, C, D, c2 must be positive");
    if (!(E <= 1.0)) throw std::invalid_argument("TireParams: E must be <= 1");
  }

  static TireParams dry() { return {7.15, 2.30, 0.87, 1.00, 1.54, Surface::Dry}; }
  static TireParams wet() { return {9.00, 2.50, 0.72, 1.00, 1.54, Surface::Wet}; }
  static TireParams snow() { return {5.00, 2.00, 0.30, 1.00, 1.54, Surface::Snow}; }
  static TireParams ice() { return {4.00, 2.00, 0.10, 1.00, 1.54, Surface::Ice}; }

  static TireParams for_surface(Surface s) {
    switch (s) {
      case Surface::Dry: return dry();
      case Surface::Wet: return wet();
      case Surface::Snow: return snow();
      case Surface::Ice: return ice();
    }
    return dry();
  }
};

/// Physical constants of the plant: geometry, masses, inertias, suspension.
struct VehicleParams {
  double l_f = 1.160;      ///< CM to front axle [m]
  double l_r = 1.750;      ///< CM to rear axle [m]
  double T = 1.260;        ///< track span parameter of the LTR formula [m]
  double h_SM = 0.780;     ///< sprung-mass CM height above roll axis [m]
  double h_UC = 0.000;     ///< undercarriage CM height [m]
  double m = 2000.0;       ///< total mass [kg]
  double m_SM = 1700.0;    ///< sprung mass [kg]
  double m_UC = 300.0;     ///< undercarriage mass [kg]
  double I_xx_SM = 1280.0; ///< sprung roll inertia [kg m^2]
  double I_xx_UC = 202.0;  ///< undercarriage roll inertia [kg m^2]
  double I_yy_SM = 2800.0; ///< sprung pitch inertia [kg m^2]
  double I_zz = 2800.0;    ///< yaw inertia [kg m^2]
  double I_xz_SM = 0.0;    ///< sprung roll-yaw product [kg m^2]
  double k_deltaSW = 17.5; ///< steering-wheel-to-road-wheel ratio [-]
  double K_s = 73991.0;    ///< suspension roll stiffness [N m/rad]
  double D_s = 5993.0;     ///< suspension roll damping [N m s/rad]
  double dk_ss = 0.0;      ///< differential stiffness factor [-]
  double dd_ss = 0.0;      ///< differential damping factor [-]

  double wheelbase() const { return l_f + l_r; }
  /// Static front-axle vertical load [N].
  double front_axle_load() const { return m * kGravity * l_r / wheelbase(); }
  /// Static rear-axle vertical load [N].
  double rear_axle_load() const { return m * kGravity * l_f / wheelbase(); }
  /// Road-wheel angle produced by a steering-wheel angle [rad].
  double road_wheel_angle(double delta_sw) const { return delta_sw / k_deltaSW; }

  /// Height of the total CM above the ground line [m].
  double cm_height() const { return (m_SM * (h_UC + h_SM) + m_UC * h_UC) / m; }

  void validate() const {
    auto pos = [](double x, const char* name) {
      if (!(x > 0.0)) throw std::invalid_argument(std::string("VehicleParams: ") + name + " must be positive");
    };
    pos(l_f, "l_f"); pos(l_r, "l_r"); pos(T, "T"); pos(h_SM, "h_SM");
    pos(m, "m"); pos(m_SM, "m_SM"); pos(m_UC, "m_UC");
    pos(I_xx_SM, "I_xx_SM"); pos(I_xx_UC, "I_xx_UC"); pos(I_yy_SM, "I_yy_SM"); pos(I_zz, "I_zz");
    pos(K_s, "K_s"); pos(D_s, "D_s");
    if (std::abs(m - (m_SM + m_UC)) > 1e-9 * m)
      throw std::invalid_argument("VehicleParams: m must equal m_SM + m_UC");
    if (!(k_deltaSW > 1.0))
      throw std::invalid_argument("VehicleParams: k_deltaSW must exceed 1");
    if (!(dk_ss >= 0.0 && dk_ss < 1.0 && dd_ss >= 0.0 && dd_ss < 1.0))
      throw std::invalid_argument("VehicleParams: differential factors must be in [0, 1)");
  }

  /// North American SUV simulation parameters.
  static VehicleParams suv() { return VehicleParams{}; }
};

/// Continuous plant state. (u, v) are body-frame speeds, (p, r) roll and yaw
/// rates, phi the sprung-mass roll relative to the undercarriage, (psi, X, Y)
/// pose for trajectory reporting. phi_uc/p_uc describe the undercarriage
/// pivot and are nonzero only while liftoff is active.
struct VehicleState {
  double u = 0.0;
  double v = 0.0;
  double p = 0.0;
  double r = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double X = 0.0;
  double Y = 0.0;
  double phi_uc = 0.0;
  double p_uc = 0.0;
  bool liftoff = false;

  static VehicleState straight_running(double speed) {
    VehicleState s;
    s.u = speed;
    return s;
  }

  bool finite() const {
    return std::isfinite(u) && std::isfinite(v) && std::isfinite(p) && std::isfinite(r) &&
           std::isfinite(phi) && std::isfinite(psi) && std::isfinite(X) && std::isfinite(Y) &&
           std::isfinite(phi_uc) && std::isfinite(p_uc);
  }
};

/// Constraint-relevant plant outputs at an instant.
struct PlantOutput {
  double ltr = 0.0;       ///< load transfer ratio [-]
  double delta_SW = 0.0;  ///< applied steering-wheel angle [rad]
  double wheel_lift = 0.0; ///< unloaded-side wheel height T*sin|phi_uc| [m]
  double a_y = 0.0;       ///< lateral acceleration [m/s^2]
  double beta = 0.0;      ///< side-slip angle [rad]
};

/// Thrown when the integrator detects numerical blow-up.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when no steady turn exists at a requested operating point.
struct TrimNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace rollgov
