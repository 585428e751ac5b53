#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <thread>

#include "rollgov/config.hpp"
#include "rollgov/csv.hpp"
#include "rollgov/io.hpp"
#include "rollgov/metrics.hpp"

namespace rollgov {

/// Immutable per-experiment assets shared by all runs: the linearization
/// bank, the admissible sets in every variant, and the ECG basis/weights.
struct GovernorAssets {
  MplBank bank;
  std::vector<AdmissibleSet> plain_sets;
  std::vector<AdmissibleSet> dist_sets;
  std::vector<AdmissibleSet> ecg_sets;
  OutputConstraints yc;
  LaguerreBasis basis;
  EcgWeights weights;
  double tau_car = 0.0;    ///< slowest stable time constant at delta0 = 0 [s]
  double yaw_gain0 = 0.0;  ///< steady yaw rate per steering-wheel angle [1/s]
};

/// Slowest stable continuous time constant of a linearization.
inline double slowest_time_constant(const LinearModel& continuous) {
  const auto eig = Eigen::EigenSolver<Eigen::Matrix4d>(continuous.A, false).eigenvalues();
  double min_re = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const double re = -eig(i).real();
    if (re > 1e-9) min_re = std::min(min_re, re);
  }
  if (!std::isfinite(min_re)) throw std::runtime_error("slowest_time_constant: unstable model");
  return 1.0 / min_re;
}

inline GovernorAssets build_assets(const ExperimentConfig& cfg) {
  const GovernorConfig& g = cfg.governor;
  GovernorAssets assets;
  assets.yc = OutputConstraints::box(g.ltr_lim, deg2rad(g.delta_sw_lim_deg));

  const double u0 = cfg.maneuver.speed;
  const LinearModel cont0 = linearize(cfg.vehicle, cfg.tire, u0, 0.0);
  assets.tau_car = slowest_time_constant(cont0);
  assets.yaw_gain0 = (-cont0.A.fullPivLu().solve(cont0.B))(1);

  assets.bank = build_mpl_bank(cfg.vehicle, cfg.tire, u0, g.bank_points_rad(), g.control_dt);

  double alpha = g.ecg_alpha;
  if (alpha < 0.0) alpha = std::clamp(1.0 - g.control_dt / assets.tau_car, 0.0, 1.0 - 1e-6);
  assets.basis = LaguerreBasis{alpha, g.ecg_depth};
  assets.weights = EcgWeights::from_basis(assets.basis, g.ecg_k_L);

  for (const auto& model : assets.bank.models) {
    AdmissibleSet plain = build_oinf(model, assets.yc, g.horizon, g.epsilon);
    assets.dist_sets.push_back(augment_disturbance(plain));
    assets.ecg_sets.push_back(
        build_ecg_oinf(model, assets.yc, assets.basis, g.horizon, g.epsilon, false));
    assets.plain_sets.push_back(std::move(plain));
  }
  return assets;
}

/// One governor instance bound to a run (owns its internal state).
class GovernorInstance {
public:
  GovernorInstance(GovernorKind kind, const ExperimentConfig& cfg, const GovernorAssets* assets)
      : kind_(kind), params_(cfg.vehicle), tire_(cfg.tire) {
    const GovernorConfig& g = cfg.governor;
    switch (kind_) {
      case GovernorKind::Off:
        break;
      case GovernorKind::Lrg: {
        LrgOptions opts{g.recovery, g.nonlinear_difference};
        lrg_ = std::make_unique<LrgGovernor>(
            assets->bank, g.nonlinear_difference ? assets->dist_sets : assets->plain_sets, opts);
        break;
      }
      case GovernorKind::Ecg:
        ecg_ = std::make_unique<EcgGovernor>(assets->bank, assets->plain_sets, assets->ecg_sets,
                                             assets->basis, assets->weights);
        break;
      case GovernorKind::Nrg: {
        NrgOptions opts{g.nrg_iters, g.nrg_horizon, g.control_dt};
        nrg_ = std::make_unique<NrgGovernor>(cfg.vehicle, cfg.tire,
                                             OutputConstraints::box(g.ltr_lim,
                                                                    deg2rad(g.delta_sw_lim_deg)),
                                             opts);
        break;
      }
    }
  }

  GovernorDecision step(double ref, const VehicleState& measured) {
    switch (kind_) {
      case GovernorKind::Off: {
        GovernorDecision dec;
        dec.v = ref;
        return dec;
      }
      case GovernorKind::Lrg: {
        const Eigen::Vector4d x(measured.v, measured.r, measured.p, measured.phi);
        const Eigen::Vector2d y(compute_ltr(measured, params_), lrg_->prev_command());
        return lrg_->step(ref, x, y);
      }
      case GovernorKind::Ecg: {
        const Eigen::Vector4d x(measured.v, measured.r, measured.p, measured.phi);
        const Eigen::Vector2d y(compute_ltr(measured, params_), ecg_->prev_command());
        return ecg_->step(ref, x, y);
      }
      case GovernorKind::Nrg:
        return nrg_->step(ref, measured);
    }
    GovernorDecision dec;
    dec.v = ref;
    return dec;
  }

  int qp_invocations() const { return ecg_ ? ecg_->qp_invocations() : 0; }

private:
  GovernorKind kind_;
  VehicleParams params_;
  TireParams tire_;
  std::unique_ptr<LrgGovernor> lrg_;
  std::unique_ptr<EcgGovernor> ecg_;
  std::unique_ptr<NrgGovernor> nrg_;
};

struct StepRecord {
  double t = 0.0;
  double ref = 0.0;
  VehicleState state;   ///< plant truth before the decision was applied
  PlantOutput out;
  GovernorDecision dec;
};

/// Complete record of one governed (or open-loop) maneuver.
struct RunRecord {
  std::vector<StepRecord> steps;
  double max_wheel_lift = 0.0;
  double max_sprung_roll = 0.0;
  double max_abs_ltr = 0.0;
  bool completed = true;
  std::string error;
  double amplitude = 0.0; ///< [rad]
  uint64_t seed = 0;
  uint64_t config_hash = 0;

  double dt = 0.01;

  RunForMetrics metrics_input() const {
    RunForMetrics m;
    m.max_wheel_lift = max_wheel_lift;
    size_t active = 0;
    m.ref.reserve(steps.size());
    for (const auto& s : steps) {
      m.ref.push_back(s.ref);
      m.applied.push_back(s.dec.v);
      m.r.push_back(s.state.r);
      m.solve_time.push_back(s.dec.solve_time);
      if (s.dec.active) ++active;
    }
    m.active_fraction = steps.empty() ? 0.0 : static_cast<double>(active) / steps.size();
    return m;
  }
};

/// Runs one maneuver with the configured governor in the loop at the
/// control rate; the plant truth is never perturbed by estimation noise.
inline RunRecord run_single(const ExperimentConfig& cfg, const GovernorAssets* assets,
                            const ManeuverSpec& maneuver, uint64_t seed,
                            GovernorKind kind_override = GovernorKind::Off,
                            bool use_override = false) {
  const GovernorKind kind = use_override ? kind_override : cfg.governor.kind;
  const double dt = cfg.governor.control_dt;

  RunRecord rec;
  rec.amplitude = maneuver.amplitude * maneuver.amplitude_scale;
  rec.seed = seed;
  rec.config_hash = config_hash(cfg);
  rec.dt = dt;

  GovernorInstance governor(kind, cfg, assets);
  Simulator sim(cfg.vehicle, cfg.tire);
  sim.reset(VehicleState::straight_running(maneuver.speed));
  NoiseProcess noise(cfg.noise, seed, dt);

  const int n_steps = static_cast<int>(std::lround(maneuver.run_duration() / dt));
  rec.steps.reserve(n_steps);
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * dt;
    const double ref = steering_reference(maneuver, t);
    if (k > 0) noise.advance();
    const VehicleState measured = cfg.noise.any() ? noise.measure(sim.state()) : sim.state();
    StepRecord srec;
    srec.t = t;
    srec.ref = ref;
    srec.state = sim.state();
    srec.dec = governor.step(ref, measured);
    srec.out = sim.current_outputs(srec.dec.v);
    rec.steps.push_back(srec);
    try {
      sim.advance(srec.dec.v, dt);
    } catch (const DivergenceError& e) {
      rec.completed = false;
      rec.error = e.what();
      break;
    }
  }
  rec.max_wheel_lift = sim.max_wheel_lift();
  rec.max_sprung_roll = sim.max_sprung_roll();
  rec.max_abs_ltr = sim.max_abs_ltr();
  return rec;
}

/// The three comparison branches at one amplitude: scaled NoLift/LimLift
/// maneuvers and the quasi-optimal NRG4 trajectory.
struct BaselineSet {
  double nolift_scale = 1.0;
  double limlift_scale = 1.0;
  std::vector<Baseline> branches; ///< nolift, nrg4, limlift (+ ref)
};

inline Baseline baseline_from_run(const std::string& name, const RunRecord& run) {
  Baseline b;
  b.name = name;
  b.delta.reserve(run.steps.size());
  b.r.reserve(run.steps.size());
  for (const auto& s : run.steps) {
    b.delta.push_back(s.dec.v);
    b.r.push_back(s.state.r);
  }
  return b;
}

inline BaselineSet compute_baselines(const ExperimentConfig& cfg, const GovernorAssets* assets,
                                     const ManeuverSpec& maneuver) {
  BaselineSet bs;
  bs.nolift_scale = find_safe_reference(maneuver, SafeReferenceTarget::NoLift, cfg.vehicle,
                                        cfg.tire, cfg.lift_limit);
  bs.limlift_scale = find_safe_reference(maneuver, SafeReferenceTarget::LimLift, cfg.vehicle,
                                         cfg.tire, cfg.lift_limit);

  ManeuverSpec scaled = maneuver;
  scaled.amplitude_scale = bs.nolift_scale;
  ExperimentConfig quiet = cfg;
  quiet.noise = NoiseSpec{};
  const RunRecord nolift = run_single(quiet, assets, scaled, 0, GovernorKind::Off, true);
  scaled.amplitude_scale = bs.limlift_scale;
  const RunRecord limlift = run_single(quiet, assets, scaled, 0, GovernorKind::Off, true);

  ExperimentConfig nrg_cfg = quiet;
  nrg_cfg.governor.nrg_iters = 4;
  const RunRecord nrg4 = run_single(nrg_cfg, assets, maneuver, 0, GovernorKind::Nrg, true);

  bs.branches.push_back(baseline_from_run("nolift", nolift));
  bs.branches.push_back(baseline_from_run("nrg4", nrg4));
  bs.branches.push_back(baseline_from_run("limlift", limlift));
  return bs;
}

/// Simple worker pool over an index range; results must be stored by index.
inline void parallel_for(int n, int threads, const std::function<void(int)>& task) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct SweepRow {
  double amplitude_deg = 0.0;
  GovernorKind governor = GovernorKind::Off;
  MetricsReport metrics;
  double chi_ref = 0.0; ///< conservatism against the unmodified reference
  double nolift_scale = 1.0;
  double limlift_scale = 1.0;
  double max_sprung_roll = 0.0;
  double max_abs_ltr = 0.0;
  bool completed = true;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<RunRecord> runs; ///< governed run per amplitude
  bool all_completed = true;
};

/// Amplitude sweep with the configured governor: per amplitude computes the
/// three baselines, runs the governed maneuver, and evaluates the metrics.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const GovernorAssets* assets) {
  SweepResult result;
  const int n = static_cast<int>(cfg.amplitudes_deg.size());
  result.rows.resize(n);
  result.runs.resize(n);

  parallel_for(n, cfg.threads, [&](int i) {
    SweepRow row;
    row.amplitude_deg = cfg.amplitudes_deg[i];
    row.governor = cfg.governor.kind;
    ManeuverSpec maneuver = cfg.maneuver;
    maneuver.amplitude = deg2rad(cfg.amplitudes_deg[i]);
    maneuver.amplitude_scale = 1.0;
    try {
      const BaselineSet baselines = compute_baselines(cfg, assets, maneuver);
      row.nolift_scale = baselines.nolift_scale;
      row.limlift_scale = baselines.limlift_scale;
      const RunRecord run = run_single(cfg, assets, maneuver, cfg.seeds.front());
      row.completed = run.completed;
      row.error = run.error;
      row.max_sprung_roll = run.max_sprung_roll;
      row.max_abs_ltr = run.max_abs_ltr;
      const RunForMetrics mi = run.metrics_input();
      row.metrics =
          evaluate_run(mi, baselines.branches, assets->yaw_gain0, run.dt, cfg.lift_limit);
      row.chi_ref = conservatism(mi.ref, mi.applied, mi.ref, run.dt);
      result.runs[i] = run;
    } catch (const std::exception& e) {
      row.completed = false;
      row.error = e.what();
    }
    result.rows[i] = row;
  });
  for (const auto& r : result.rows) result.all_completed &= r.completed;
  return result;
}

struct MonteCarloRow {
  double amplitude_deg = 0.0;
  GovernorKind governor = GovernorKind::Off;
  int n_seeds = 0;
  double eta_lift_mean = 1.0;
  double eta_lift_min = 1.0;
  double max_lift_mean = 0.0;
  double max_lift_max = 0.0;
  double chi_nrg4_mean = 0.0;
  double active_fraction_mean = 0.0;
  double solve_time_mean = 0.0;
  double solve_time_max = 0.0;
  bool completed = true;
};

/// Monte Carlo estimation-error study: per amplitude, seeds many noisy runs
/// of the configured governor and aggregates the metrics. Noise perturbs
/// only the governor inputs; baselines come from noiseless runs.
inline std::vector<MonteCarloRow> run_monte_carlo(const ExperimentConfig& cfg,
                                                  const GovernorAssets* assets,
                                                  bool with_chi = true) {
  const int n_amp = static_cast<int>(cfg.amplitudes_deg.size());
  const int n_seed = static_cast<int>(cfg.seeds.size());
  std::vector<MonteCarloRow> rows(n_amp);

  parallel_for(n_amp, cfg.threads, [&](int i) {
    MonteCarloRow row;
    row.amplitude_deg = cfg.amplitudes_deg[i];
    row.governor = cfg.governor.kind;
    row.n_seeds = n_seed;
    ManeuverSpec maneuver = cfg.maneuver;
    maneuver.amplitude = deg2rad(cfg.amplitudes_deg[i]);
    maneuver.amplitude_scale = 1.0;
    try {
      Baseline nrg4_base;
      if (with_chi) {
        ExperimentConfig quiet = cfg;
        quiet.noise = NoiseSpec{};
        quiet.governor.nrg_iters = 4;
        const RunRecord nrg4 = run_single(quiet, assets, maneuver, 0, GovernorKind::Nrg, true);
        nrg4_base = baseline_from_run("nrg4", nrg4);
      }

      double eta_sum = 0.0, lift_sum = 0.0, chi_sum = 0.0, act_sum = 0.0, solve_sum = 0.0;
      for (int s = 0; s < n_seed; ++s) {
        const RunRecord run = run_single(cfg, assets, maneuver, cfg.seeds[s]);
        row.completed &= run.completed;
        const RunForMetrics mi = run.metrics_input();
        const double eta = effectiveness(run.max_wheel_lift, cfg.lift_limit);
        eta_sum += eta;
        row.eta_lift_min = std::min(row.eta_lift_min, eta);
        lift_sum += run.max_wheel_lift;
        row.max_lift_max = std::max(row.max_lift_max, run.max_wheel_lift);
        if (with_chi) chi_sum += conservatism(mi.ref, mi.applied, nrg4_base.delta, run.dt);
        act_sum += mi.active_fraction;
        double mean_solve = 0.0;
        for (double ts : mi.solve_time) {
          mean_solve += ts;
          row.solve_time_max = std::max(row.solve_time_max, ts);
        }
        if (!mi.solve_time.empty()) solve_sum += mean_solve / mi.solve_time.size();
      }
      row.eta_lift_mean = eta_sum / n_seed;
      row.max_lift_mean = lift_sum / n_seed;
      row.chi_nrg4_mean = chi_sum / n_seed;
      row.active_fraction_mean = act_sum / n_seed;
      row.solve_time_mean = solve_sum / n_seed;
    } catch (const std::exception&) {
      row.completed = false;
    }
    rows[i] = row;
  });
  return rows;
}

// ---- output emission ----

inline void write_traces_csv(const std::string& path, const RunRecord& run) {
  CsvWriter csv(path);
  csv.header({"t", "u", "v", "p", "r", "phi", "psi", "X", "Y", "delta_SW", "LTR", "wheel_lift",
              "a_y", "beta"});
  for (const auto& s : run.steps) {
    csv.field(s.t)
        .field(s.state.u)
        .field(s.state.v)
        .field(s.state.p)
        .field(s.state.r)
        .field(s.state.phi + s.state.phi_uc)
        .field(s.state.psi)
        .field(s.state.X)
        .field(s.state.Y)
        .field(s.dec.v)
        .field(s.out.ltr)
        .field(s.out.wheel_lift)
        .field(s.out.a_y)
        .field(s.out.beta);
    csv.end_row();
  }
}

inline void write_decisions_csv(const std::string& path, const RunRecord& run) {
  CsvWriter csv(path);
  csv.header({"t", "ref", "v", "active", "level", "recovery", "rows_removed", "relax_eps",
              "solve_time"});
  for (const auto& s : run.steps) {
    csv.field(s.t)
        .field(s.ref)
        .field(s.dec.v)
        .field(s.dec.active ? 1 : 0)
        .field(s.dec.feasibility_level)
        .field(std::string(to_string(s.dec.recovery_used)))
        .field(s.dec.rows_removed)
        .field(s.dec.relax_epsilon)
        .field(s.dec.solve_time);
    csv.end_row();
  }
}

inline void write_metrics_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  CsvWriter csv(path);
  csv.header({"amplitude_deg", "governor", "eta_lift", "max_lift_m", "active_fraction",
              "chi_ref", "chi_nolift", "chi_nrg4", "chi_limlift", "etapsi_nolift", "etapsi_nrg4",
              "etapsi_limlift", "solve_mean_s", "solve_max_s", "nolift_scale", "limlift_scale",
              "max_sprung_roll_deg", "max_abs_ltr", "completed", "error"});
  for (const auto& r : rows) {
    auto chi = [&](const char* k) {
      auto it = r.metrics.chi_by_baseline.find(k);
      return it == r.metrics.chi_by_baseline.end() ? 0.0 : it->second;
    };
    auto psi = [&](const char* k) {
      auto it = r.metrics.eta_psi_by_baseline.find(k);
      return it == r.metrics.eta_psi_by_baseline.end() ? 0.0 : it->second;
    };
    csv.field(r.amplitude_deg)
        .field(std::string(to_string(r.governor)))
        .field(r.metrics.eta_lift)
        .field(r.metrics.max_wheel_lift)
        .field(r.metrics.active_fraction)
        .field(r.chi_ref)
        .field(chi("nolift"))
        .field(chi("nrg4"))
        .field(chi("limlift"))
        .field(psi("nolift"))
        .field(psi("nrg4"))
        .field(psi("limlift"))
        .field(r.metrics.compute_time.mean)
        .field(r.metrics.compute_time.max)
        .field(r.nolift_scale)
        .field(r.limlift_scale)
        .field(rad2deg(r.max_sprung_roll))
        .field(r.max_abs_ltr)
        .field(r.completed ? 1 : 0)
        .field(r.error);
    csv.end_row();
  }
}

/// Long-format companion: one row per amplitude x governor x comparison
/// branch, convenient for plotting against the sweep axis.
inline void write_metrics_long_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  CsvWriter csv(path);
  csv.header({"amplitude_deg", "governor", "baseline", "chi", "eta_psi", "eta_lift",
              "active_fraction"});
  for (const auto& r : rows) {
    for (const char* base : {"nolift", "nrg4", "limlift"}) {
      auto chi_it = r.metrics.chi_by_baseline.find(base);
      auto psi_it = r.metrics.eta_psi_by_baseline.find(base);
      if (chi_it == r.metrics.chi_by_baseline.end()) continue;
      csv.field(r.amplitude_deg)
          .field(std::string(to_string(r.governor)))
          .field(std::string(base))
          .field(chi_it->second)
          .field(psi_it == r.metrics.eta_psi_by_baseline.end() ? 0.0 : psi_it->second)
          .field(r.metrics.eta_lift)
          .field(r.metrics.active_fraction);
      csv.end_row();
    }
  }
}

inline void write_montecarlo_csv(const std::string& path, const std::vector<MonteCarloRow>& rows) {
  CsvWriter csv(path);
  csv.header({"amplitude_deg", "governor", "n_seeds", "eta_lift_mean", "eta_lift_min",
              "max_lift_mean_m", "max_lift_max_m", "chi_nrg4_mean", "active_fraction_mean",
              "solve_time_mean_s", "solve_time_max_s", "completed"});
  for (const auto& r : rows) {
    csv.field(r.amplitude_deg)
        .field(std::string(to_string(r.governor)))
        .field(r.n_seeds)
        .field(r.eta_lift_mean)
        .field(r.eta_lift_min)
        .field(r.max_lift_mean)
        .field(r.max_lift_max)
        .field(r.chi_nrg4_mean)
        .field(r.active_fraction_mean)
        .field(r.solve_time_mean)
        .field(r.solve_time_max)
        .field(r.completed ? 1 : 0);
    csv.end_row();
  }
}

inline void write_manifest(const std::string& path, const ExperimentConfig& cfg) {
  json j{{"config", to_json(cfg)},
         {"config_hash", config_hash(cfg)},
         {"rng", kRngAlgorithm},
         {"rollgov_version", kVersion},
         {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                               std::to_string(EIGEN_MAJOR_VERSION) + "." +
                               std::to_string(EIGEN_MINOR_VERSION)}};
  save_json(j, path);
}

} // namespace rollgov
