// Command-line front end: single runs, amplitude sweeps, Monte Carlo
// estimation-error studies, baseline computation, and report printing.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

#include "rollgov/harness.hpp"

namespace fs = std::filesystem;
using namespace rollgov;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string governor;
  std::string out_dir;
  std::vector<uint64_t> seeds;
  double amplitude_deg = -1.0;
  double speed_kmh = -1.0;
  double duration = -1.0;
};

ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = load_experiment(args.config_path);
  if (!args.governor.empty()) cfg.governor.kind = governor_from_string(args.governor);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (!args.seeds.empty()) cfg.seeds = args.seeds;
  if (args.amplitude_deg >= 0.0) cfg.maneuver.amplitude = deg2rad(args.amplitude_deg);
  if (args.speed_kmh > 0.0) cfg.maneuver.speed = args.speed_kmh / 3.6;
  if (args.duration > 0.0) cfg.maneuver.duration = args.duration;
  cfg.validate();
  return cfg;
}

const GovernorAssets* assets_for(const ExperimentConfig& cfg, std::unique_ptr<GovernorAssets>& box) {
  if (cfg.governor.kind == GovernorKind::Off || cfg.governor.kind == GovernorKind::Nrg) {
    // NRG and open-loop runs need no linear assets, but baselines do; build lazily.
  }
  box = std::make_unique<GovernorAssets>(build_assets(cfg));
  return box.get();
}

void print_table(const std::string& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path);
  std::string line;
  std::vector<std::vector<std::string>> cells;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) row.push_back(field);
    cells.push_back(row);
  }
  if (cells.empty()) return;
  std::vector<size_t> widths;
  for (const auto& row : cells) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
  }
  for (const auto& row : cells) {
    for (size_t i = 0; i < row.size(); ++i)
      std::cout << std::setw(static_cast<int>(widths[i]) + 2) << row[i];
    std::cout << "\n";
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reference-governor rollover avoidance harness"};
  app.require_subcommand(1);

  CommonArgs args;
  app.add_option("--config", args.config_path, "Experiment config JSON");

  std::string dump_path;
  auto* dump = app.add_subcommand("dump-config", "Write the default config to a file");
  dump->add_option("path", dump_path, "Output path")->required();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--governor", args.governor, "off|lrg|ecg|nrg");
    sub->add_option("--out", args.out_dir, "Output directory");
    sub->add_option("--seed", args.seeds, "Seed list");
    sub->add_option("--speed-kmh", args.speed_kmh, "Entry speed [km/h]");
  };

  auto* run = app.add_subcommand("run", "Single governed maneuver; writes traces/decisions");
  add_common(run);
  run->add_option("--amplitude-deg", args.amplitude_deg, "Steering amplitude [deg]");
  run->add_option("--duration", args.duration, "Run duration [s]");

  auto* sweep = app.add_subcommand("sweep", "Amplitude sweep with metrics");
  add_common(sweep);

  auto* mc = app.add_subcommand("montecarlo", "Seeded estimation-error study");
  add_common(mc);
  double sigma_phi = -1.0, sigma_p = -1.0, sigma_v = -1.0, sigma_r = -1.0;
  mc->add_option("--sigma-phi", sigma_phi, "Relative roll-angle noise");
  mc->add_option("--sigma-p", sigma_p, "Relative roll-rate noise");
  mc->add_option("--sigma-v", sigma_v, "Relative side-slip noise");
  mc->add_option("--sigma-r", sigma_r, "Relative turn-rate noise");

  auto* base = app.add_subcommand("baselines", "NoLift/LimLift/NRG4 safe-reference table");
  add_common(base);

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print a metrics table from an output directory");
  report->add_option("--in", report_dir, "Directory with metrics.csv/montecarlo.csv")->required();

  auto* exp = app.add_subcommand("export", "Export the linearization bank and admissible sets");
  add_common(exp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump->parsed()) {
      save_json(to_json(ExperimentConfig{}), dump_path);
      std::cout << "wrote " << dump_path << "\n";
      return 0;
    }
    if (report->parsed()) {
      const fs::path dir(report_dir);
      bool found = false;
      for (const char* name : {"metrics.csv", "montecarlo.csv", "baselines.csv"}) {
        const fs::path p = dir / name;
        if (fs::exists(p)) {
          std::cout << "== " << name << " ==\n";
          print_table(p.string());
          found = true;
        }
      }
      if (!found) {
        std::cerr << "no report CSVs found in " << report_dir << "\n";
        return 1;
      }
      return 0;
    }

    ExperimentConfig cfg = resolve_config(args);
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);

    std::unique_ptr<GovernorAssets> assets_box;
    const GovernorAssets* assets = assets_for(cfg, assets_box);

    if (run->parsed()) {
      const RunRecord rec = run_single(cfg, assets, cfg.maneuver, cfg.seeds.front());
      write_traces_csv((out / "traces.csv").string(), rec);
      write_decisions_csv((out / "decisions.csv").string(), rec);
      write_manifest((out / "manifest.json").string(), cfg);
      std::cout << "run: amplitude " << rad2deg(cfg.maneuver.amplitude) << " deg, governor "
                << to_string(cfg.governor.kind) << ", max lift "
                << rec.max_wheel_lift * 1000.0 << " mm, max |LTR| " << rec.max_abs_ltr
                << (rec.completed ? "" : " [FAILED: " + rec.error + "]") << "\n";
      return rec.completed ? 0 : 1;
    }

    if (sweep->parsed()) {
      const SweepResult res = run_sweep(cfg, assets);
      write_metrics_csv((out / "metrics.csv").string(), res.rows);
      write_metrics_long_csv((out / "metrics_long.csv").string(), res.rows);
      write_manifest((out / "manifest.json").string(), cfg);
      std::cout << "sweep: " << res.rows.size() << " amplitudes, governor "
                << to_string(cfg.governor.kind) << ", all completed: "
                << (res.all_completed ? "yes" : "NO") << "\n";
      return res.all_completed ? 0 : 1;
    }

    if (mc->parsed()) {
      if (sigma_phi >= 0.0) cfg.noise.sigma_phi = sigma_phi;
      if (sigma_p >= 0.0) cfg.noise.sigma_p = sigma_p;
      if (sigma_v >= 0.0) cfg.noise.sigma_v = sigma_v;
      if (sigma_r >= 0.0) cfg.noise.sigma_r = sigma_r;
      const std::vector<MonteCarloRow> rows = run_monte_carlo(cfg, assets);
      write_montecarlo_csv((out / "montecarlo.csv").string(), rows);
      write_manifest((out / "manifest.json").string(), cfg);
      bool ok = true;
      for (const auto& r : rows) ok &= r.completed;
      std::cout << "montecarlo: " << rows.size() << " amplitudes x " << cfg.seeds.size()
                << " seeds, all completed: " << (ok ? "yes" : "NO") << "\n";
      return ok ? 0 : 1;
    }

    if (base->parsed()) {
      CsvWriter csv((out / "baselines.csv").string());
      csv.header({"amplitude_deg", "nolift_scale", "limlift_scale", "nrg4_max_lift_m",
                  "nrg4_active_fraction"});
      bool ok = true;
      for (double amp : cfg.amplitudes_deg) {
        ManeuverSpec m = cfg.maneuver;
        m.amplitude = deg2rad(amp);
        const BaselineSet bs = compute_baselines(cfg, assets, m);
        ExperimentConfig quiet = cfg;
        quiet.noise = NoiseSpec{};
        quiet.governor.nrg_iters = 4;
        const RunRecord nrg4 = run_single(quiet, assets, m, 0, GovernorKind::Nrg, true);
        ok &= nrg4.completed;
        double active = nrg4.metrics_input().active_fraction;
        csv.field(amp)
            .field(bs.nolift_scale)
            .field(bs.limlift_scale)
            .field(nrg4.max_wheel_lift)
            .field(active);
        csv.end_row();
      }
      write_manifest((out / "manifest.json").string(), cfg);
      std::cout << "baselines: " << cfg.amplitudes_deg.size() << " amplitudes\n";
      return ok ? 0 : 1;
    }

    if (exp->parsed()) {
      save_bank(assets->bank, (out / "bank.json").string());
      for (size_t i = 0; i < assets->plain_sets.size(); ++i) {
        save_set(assets->plain_sets[i], (out / ("oinf_plain_" + std::to_string(i) + ".json")).string());
        save_set(assets->dist_sets[i], (out / ("oinf_dist_" + std::to_string(i) + ".json")).string());
        save_set(assets->ecg_sets[i], (out / ("oinf_ecg_" + std::to_string(i) + ".json")).string());
      }
      std::cout << "exported bank and " << 3 * assets->plain_sets.size() << " sets to "
                << cfg.out_dir << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
