#pragma once

#include <json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "rollgov/governors.hpp"
#include "rollgov/maneuvers.hpp"
#include "rollgov/rng.hpp"
#include "rollgov/types.hpp"

namespace rollgov {

using json = nlohmann::json;

enum class GovernorKind { Off, Lrg, Ecg, Nrg };

inline const char* to_string(GovernorKind k) {
  switch (k) {
    case GovernorKind::Off: return "off";
    case GovernorKind::Lrg: return "lrg";
    case GovernorKind::Ecg: return "ecg";
    case GovernorKind::Nrg: return "nrg";
  }
  return "off";
}

inline GovernorKind governor_from_string(const std::string& s) {
  if (s == "off") return GovernorKind::Off;
  if (s == "lrg") return GovernorKind::Lrg;
  if (s == "ecg") return GovernorKind::Ecg;
  if (s == "nrg") return GovernorKind::Nrg;
  throw std::invalid_argument("unknown governor kind: " + s);
}

/// Governor construction options shared by the harness and the CLI.
struct GovernorConfig {
  GovernorKind kind = GovernorKind::Lrg;
  RecoveryKind recovery = RecoveryKind::Contraction;
  bool nonlinear_difference = true;
  int mpl_selection = 3;                   ///< RGMPL1/2/3 point selections
  std::vector<double> mpl_points_deg;      ///< overrides the selection when set
  double ltr_lim = 0.99;
  double delta_sw_lim_deg = 150.0;
  int horizon = 100;
  double epsilon = 1e-3;
  double control_dt = 0.01;
  int nrg_iters = 4;
  double nrg_horizon = 1.0;
  int ecg_depth = 4;
  double ecg_k_L = 1.0;
  double ecg_alpha = -1.0; ///< < 0 selects 1 - dt/tau_car automatically

  std::vector<double> bank_points_rad() const {
    std::vector<double> pts;
    const std::vector<double>& deg =
        mpl_points_deg.empty() ? mpl_points_deg_default() : mpl_points_deg;
    pts.reserve(deg.size());
    for (double d : deg) pts.push_back(deg2rad(d));
    return pts;
  }

  std::vector<double> mpl_points_deg_default() const {
    return rollgov::mpl_points_deg(mpl_selection);
  }
};

/// Full experiment definition: plant, governor, maneuver grid, noise, seeds.
struct ExperimentConfig {
  VehicleParams vehicle = VehicleParams::suv();
  TireParams tire = TireParams::dry();
  GovernorConfig governor;
  ManeuverSpec maneuver;
  std::vector<double> amplitudes_deg = {10, 20, 30, 40, 50, 60, 70, 80,
                                        90, 100, 110, 120, 130, 140, 150, 160};
  NoiseSpec noise;
  std::vector<uint64_t> seeds = default_seeds();

  static std::vector<uint64_t> default_seeds() {
    std::vector<uint64_t> s(50);
    for (size_t i = 0; i < s.size(); ++i) s[i] = i + 1;
    return s;
  }
  double lift_limit = 0.05;
  std::string out_dir = "out";
  int threads = 0; ///< 0 = hardware concurrency

  void validate() const {
    vehicle.validate();
    tire.validate();
    maneuver.validate();
    noise.validate();
    for (double a : amplitudes_deg)
      if (a < 0.0 || a > 180.0)
        throw std::invalid_argument("ExperimentConfig: amplitudes must be within [0, 180] deg");
    if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: at least one seed required");
  }
};

// ---- JSON mappings (field names mirror the parameter tables) ----

inline json to_json(const VehicleParams& p) {
  return json{{"l_f", p.l_f},       {"l_r", p.l_r},       {"T", p.T},
              {"h_SM", p.h_SM},     {"h_UC", p.h_UC},     {"m", p.m},
              {"m_SM", p.m_SM},     {"m_UC", p.m_UC},     {"I_xx_SM", p.I_xx_SM},
              {"I_xx_UC", p.I_xx_UC}, {"I_yy_SM", p.I_yy_SM}, {"I_zz", p.I_zz},
              {"I_xz_SM", p.I_xz_SM}, {"k_deltaSW", p.k_deltaSW}, {"K_s", p.K_s},
              {"D_s", p.D_s},       {"dk_ss", p.dk_ss},   {"dd_ss", p.dd_ss}};
}

inline VehicleParams vehicle_from_json(const json& j) {
  VehicleParams p;
  p.l_f = j.value("l_f", p.l_f);
  p.l_r = j.value("l_r", p.l_r);
  p.T = j.value("T", p.T);
  p.h_SM = j.value("h_SM", p.h_SM);
  p.h_UC = j.value("h_UC", p.h_UC);
  p.m = j.value("m", p.m);
  p.m_SM = j.value("m_SM", p.m_SM);
  p.m_UC = j.value("m_UC", p.m_UC);
  p.I_xx_SM = j.value("I_xx_SM", p.I_xx_SM);
  p.I_xx_UC = j.value("I_xx_UC", p.I_xx_UC);
  p.I_yy_SM = j.value("I_yy_SM", p.I_yy_SM);
  p.I_zz = j.value("I_zz", p.I_zz);
  p.I_xz_SM = j.value("I_xz_SM", p.I_xz_SM);
  p.k_deltaSW = j.value("k_deltaSW", p.k_deltaSW);
  p.K_s = j.value("K_s", p.K_s);
  p.D_s = j.value("D_s", p.D_s);
  p.dk_ss = j.value("dk_ss", p.dk_ss);
  p.dd_ss = j.value("dd_ss", p.dd_ss);
  p.validate();
  return p;
}

inline json to_json(const TireParams& t) {
  return json{{"B", t.B}, {"C", t.C}, {"D", t.D}, {"E", t.E}, {"c2", t.c2},
              {"surface", to_string(t.surface)}};
}

inline TireParams tire_from_json(const json& j) {
  TireParams t;
  if (j.contains("surface")) t = TireParams::for_surface(surface_from_string(j["surface"]));
  t.B = j.value("B", t.B);
  t.C = j.value("C", t.C);
  t.D = j.value("D", t.D);
  t.E = j.value("E", t.E);
  t.c2 = j.value("c2", t.c2);
  t.validate();
  return t;
}

inline json to_json(const ManeuverSpec& m) {
  return json{{"kind", to_string(m.kind)},
              {"amplitude_deg", rad2deg(m.amplitude)},
              {"frequency", m.frequency},
              {"dwell", m.dwell},
              {"speed_kmh", m.speed * 3.6},
              {"duration", m.duration},
              {"amplitude_scale", m.amplitude_scale}};
}

inline ManeuverSpec maneuver_from_json(const json& j) {
  ManeuverSpec m;
  if (j.contains("kind")) m.kind = maneuver_from_string(j["kind"]);
  if (j.contains("amplitude_deg")) m.amplitude = deg2rad(j["amplitude_deg"].get<double>());
  m.frequency = j.value("frequency", m.frequency);
  m.dwell = j.value("dwell", m.dwell);
  if (j.contains("speed_kmh")) m.speed = j["speed_kmh"].get<double>() / 3.6;
  m.duration = j.value("duration", m.duration);
  m.amplitude_scale = j.value("amplitude_scale", m.amplitude_scale);
  m.validate();
  return m;
}

inline json to_json(const NoiseSpec& n) {
  return json{{"sigma_v", n.sigma_v}, {"sigma_r", n.sigma_r},
              {"sigma_p", n.sigma_p}, {"sigma_phi", n.sigma_phi}, {"tau", n.tau}};
}

inline NoiseSpec noise_from_json(const json& j) {
  NoiseSpec n;
  n.sigma_v = j.value("sigma_v", 0.0);
  n.sigma_r = j.value("sigma_r", 0.0);
  n.sigma_p = j.value("sigma_p", 0.0);
  n.sigma_phi = j.value("sigma_phi", 0.0);
  n.tau = j.value("tau", n.tau);
  n.validate();
  return n;
}

inline json to_json(const GovernorConfig& g) {
  return json{{"kind", to_string(g.kind)},
              {"recovery", to_string(g.recovery)},
              {"nonlinear_difference", g.nonlinear_difference},
              {"mpl_selection", g.mpl_selection},
              {"mpl_points_deg", g.mpl_points_deg},
              {"ltr_lim", g.ltr_lim},
              {"delta_sw_lim_deg", g.delta_sw_lim_deg},
              {"horizon", g.horizon},
              {"epsilon", g.epsilon},
              {"control_dt", g.control_dt},
              {"nrg_iters", g.nrg_iters},
              {"nrg_horizon", g.nrg_horizon},
              {"ecg_depth", g.ecg_depth},
              {"ecg_k_L", g.ecg_k_L},
              {"ecg_alpha", g.ecg_alpha}};
}

inline GovernorConfig governor_config_from_json(const json& j) {
  GovernorConfig g;
  if (j.contains("kind")) g.kind = governor_from_string(j["kind"]);
  if (j.contains("recovery")) g.recovery = recovery_from_string(j["recovery"]);
  g.nonlinear_difference = j.value("nonlinear_difference", g.nonlinear_difference);
  g.mpl_selection = j.value("mpl_selection", g.mpl_selection);
  g.mpl_points_deg = j.value("mpl_points_deg", g.mpl_points_deg);
  g.ltr_lim = j.value("ltr_lim", g.ltr_lim);
  g.delta_sw_lim_deg = j.value("delta_sw_lim_deg", g.delta_sw_lim_deg);
  g.horizon = j.value("horizon", g.horizon);
  g.epsilon = j.value("epsilon", g.epsilon);
  g.control_dt = j.value("control_dt", g.control_dt);
  g.nrg_iters = j.value("nrg_iters", g.nrg_iters);
  g.nrg_horizon = j.value("nrg_horizon", g.nrg_horizon);
  g.ecg_depth = j.value("ecg_depth", g.ecg_depth);
  g.ecg_k_L = j.value("ecg_k_L", g.ecg_k_L);
  g.ecg_alpha = j.value("ecg_alpha", g.ecg_alpha);
  return g;
}

inline json to_json(const ExperimentConfig& c) {
  return json{{"vehicle", to_json(c.vehicle)},
              {"tire", to_json(c.tire)},
              {"governor", to_json(c.governor)},
              {"maneuver", to_json(c.maneuver)},
              {"amplitudes_deg", c.amplitudes_deg},
              {"noise", to_json(c.noise)},
              {"seeds", c.seeds},
              {"lift_limit", c.lift_limit},
              {"out_dir", c.out_dir},
              {"threads", c.threads}};
}

inline ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("vehicle")) c.vehicle = vehicle_from_json(j["vehicle"]);
  if (j.contains("tire")) c.tire = tire_from_json(j["tire"]);
  if (j.contains("governor")) c.governor = governor_config_from_json(j["governor"]);
  if (j.contains("maneuver")) c.maneuver = maneuver_from_json(j["maneuver"]);
  c.amplitudes_deg = j.value("amplitudes_deg", c.amplitudes_deg);
  if (j.contains("noise")) c.noise = noise_from_json(j["noise"]);
  c.seeds = j.value("seeds", c.seeds);
  c.lift_limit = j.value("lift_limit", c.lift_limit);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  in >> j;
  return experiment_from_json(j);
}

inline void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << j.dump(2) << "\n";
}

/// FNV-1a hash of the canonical config dump, for run provenance.
inline uint64_t config_hash(const ExperimentConfig& c) {
  const std::string dump = to_json(c).dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

} // namespace rollgov
