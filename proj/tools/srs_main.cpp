// srs: noise budget, lock-in simulation, wavelength scan, and parameter
// sweep for a balanced stimulated-Raman detection front end.
//
// Exit codes: 0 success, 2 usage or config error, 3 domain invariant
// violation, 4 numerical failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "srs/srs.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "srs_out";
  std::optional<std::uint64_t> seed;
  bool no_noise = false;
  bool print_effective_config = false;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file (absent keys keep defaults)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override sim.seed");
  cmd->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
  cmd->add_flag("--no-noise", o.no_noise, "Disable every noise source");
  cmd->add_flag("--print-effective-config", o.print_effective_config,
                "Print the fully defaulted configuration as JSON and exit");
}

srs::config::RunConfig load_effective_config(const CommonOpts& o) {
  srs::config::RunConfig cfg;
  if (!o.config_path.empty()) {
    cfg = srs::config::load_config(o.config_path);
  } else {
    cfg.validate_static();
  }
  if (o.seed) cfg.sim.seed = *o.seed;
  if (o.no_noise) {
    cfg.sim.noise_shot = false;
    cfg.sim.noise_electronics = false;
    cfg.sim.noise_rin = false;
  }
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + path.string());
}

// Shared preamble of every command: build the effective config, honor
// --print-effective-config as a dry run.
bool handle_preamble(const CommonOpts& o, srs::config::RunConfig& cfg) {
  cfg = load_effective_config(o);
  if (o.print_effective_config) {
    std::cout << srs::config::effective_config_json(cfg).dump(2) << "\n";
    return false;
  }
  return true;
}

int cmd_budget(const CommonOpts& o) {
  srs::config::RunConfig cfg;
  if (!handle_preamble(o, cfg)) return 0;
  const auto rep = srs::reports::make_budget_report(cfg);
  const fs::path out(o.out_dir);
  write_file(out / "budget.csv", rep.csv_text);
  write_file(out / "report.txt", rep.report_text);
  std::cout << rep.report_text;
  return 0;
}

int cmd_simulate(const CommonOpts& o, bool skip_compare) {
  srs::config::RunConfig cfg;
  if (!handle_preamble(o, cfg)) return 0;
  const auto& fe = cfg.frontend;

  // The simulated channel sits at the configured Stokes wavelength; the
  // sample supplies the gain for the pump defined in the scan block.
  double shift = 0.0;
  double gain_ppm = 0.0;
  if (cfg.laser.wavelength > cfg.scan.lambda_pump) {
    shift = srs::model::wavenumber_shift(cfg.scan.lambda_pump, cfg.laser.wavelength);
    gain_ppm = srs::model::sample_gain_at(cfg.sample, shift);
  }

  const double kappa = srs::timesim::discrete_signal_gain(fe, cfg.sim);
  const double i_dc = srs::model::dc_current(cfg.laser, cfg.photodiode);
  const auto res = srs::timesim::simulate_channel(cfg.laser, cfg.photodiode, gain_ppm, fe,
                                                  cfg.sim, 0, true);
  const double recovered = res.demod_mean / (kappa * i_dc) * 1e6;

  std::vector<srs::timesim::ComparisonRow> compare;
  const bool any_noise = cfg.sim.noise_shot || cfg.sim.noise_electronics || cfg.sim.noise_rin;
  if (!skip_compare && any_noise) {
    compare = srs::timesim::compare_analytic(fe, cfg.laser, cfg.photodiode, cfg.sim);
  }

  const fs::path out(o.out_dir);
  write_file(out / "traces" / "v_out.csv", srs::reports::trace_csv(res.v_out));
  write_file(out / "stats.csv", srs::reports::stats_csv(compare));
  write_file(out / "demod.csv", srs::reports::demod_csv(gain_ppm, res, recovered));
  const std::string report =
      srs::reports::simulate_report_text(cfg, shift, gain_ppm, kappa, res, recovered, compare);
  write_file(out / "report.txt", report);
  std::cout << report;
  return 0;
}

int cmd_scan(const CommonOpts& o) {
  srs::config::RunConfig cfg;
  if (!handle_preamble(o, cfg)) return 0;
  const auto scan = srs::timesim::run_scan(cfg.sample, cfg.scan.lambda_pump, cfg.scan.lambda_lo,
                                           cfg.scan.lambda_hi, cfg.scan.n_points, cfg.sim,
                                           cfg.frontend, cfg.laser, cfg.photodiode);
  const auto analysis = srs::timesim::analyze_scan(scan);
  const fs::path out(o.out_dir);
  write_file(out / "scan.csv", srs::reports::scan_csv(scan));
  const std::string report = srs::reports::scan_summary_text(scan, analysis);
  write_file(out / "report.txt", report);
  std::cout << report;
  return 0;
}

int cmd_sweep(const CommonOpts& o) {
  srs::config::RunConfig cfg;
  if (!handle_preamble(o, cfg)) return 0;
  const auto rows = srs::reports::make_sweep_rows(cfg);
  const std::string csv = srs::reports::sweep_csv(cfg.sweep.variable, rows);
  const fs::path out(o.out_dir);
  write_file(out / "sweep.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced lock-in detection front end: noise budget and simulation"};
  app.require_subcommand(1);

  CommonOpts budget_opts, sim_opts, scan_opts, sweep_opts;
  bool skip_compare = false;

  auto* budget = app.add_subcommand("budget", "Analytic noise budget report");
  add_common_options(budget, budget_opts);
  auto* simulate = app.add_subcommand("simulate", "Single-channel Monte Carlo simulation");
  add_common_options(simulate, sim_opts);
  simulate->add_flag("--skip-compare", skip_compare,
                     "Skip the Monte Carlo vs analytic comparison runs");
  auto* scan = app.add_subcommand("scan", "Wavelength scan with peak detection");
  add_common_options(scan, scan_opts);
  auto* sweep = app.add_subcommand("sweep", "Analytic sweep over one parameter");
  add_common_options(sweep, sweep_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (budget->parsed()) return cmd_budget(budget_opts);
    if (simulate->parsed()) return cmd_simulate(sim_opts, skip_compare);
    if (scan->parsed()) return cmd_scan(scan_opts);
    if (sweep->parsed()) return cmd_sweep(sweep_opts);
    std::cerr << "error: no command\n";
    return 2;
  } catch (const srs::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const srs::invariant_violation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const srs::numeric_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
