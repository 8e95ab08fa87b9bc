// catprobe: reproducible experiment runner for the cat-state diagnostics
// library. Subcommands map to the four experiment families plus config
// validation; every run writes machine-readable outputs and a manifest with
// full provenance (parameters, seeds, version, checksums).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>

#include "catprobe/config.hpp"
#include "catprobe/experiments.hpp"
#include "catprobe/outputs.hpp"
#include "catprobe/version.hpp"

namespace {

using namespace catprobe;

// Every option funnels through the same key=value pipeline as config files,
// so flags and files share one parser and one validator; flags win.
class FlagSet {
 public:
  explicit FlagSet(CLI::App* cmd) : cmd_(cmd) {
    cmd_->add_option("--config", config_path_, "flat key=value config file; flags override");
  }

  void option(const std::string& key, const std::string& desc) {
    auto storage = std::make_shared<std::string>();
    auto* opt = cmd_->add_option("--" + key, *storage, desc);
    entries_.emplace_back(key, opt, storage);
  }

  void flag(const std::string& key, const std::string& desc) {
    auto storage = std::make_shared<std::string>();
    auto* opt = cmd_->add_flag_callback(
        "--" + key, [storage] { *storage = "true"; }, desc);
    entries_.emplace_back(key, opt, storage);
  }

  const std::string& config_path() const { return config_path_; }

  std::vector<ConfigEntry> set_entries() const {
    std::vector<ConfigEntry> out;
    for (const auto& [key, opt, storage] : entries_) {
      if (opt->count() > 0) out.push_back({key, *storage, 0, "flag"});
    }
    return out;
  }

 private:
  CLI::App* cmd_;
  std::string config_path_;
  std::vector<std::tuple<std::string, CLI::Option*, std::shared_ptr<std::string>>> entries_;
};

void add_common_options(FlagSet& flags) {
  flags.option("threads", "worker threads (0 = CATPROBE_THREADS or hardware)");
  flags.option("out", "output directory (default .)");
  flags.option("seed", "master seed for all random derivations");
  flags.option("kmax", "highest probability moment to estimate");
}

ExperimentConfig assemble_config(const std::string& experiment, const FlagSet& flags) {
  ExperimentConfig cfg;
  cfg.experiment = experiment;
  bool threads_set = false;
  if (!flags.config_path().empty()) {
    const auto file_entries = parse_config_file(flags.config_path());
    apply_entries(cfg, file_entries);
    if (cfg.experiment != experiment) {
      throw config_error(flags.config_path() + ": experiment '" + cfg.experiment +
                         "' does not match subcommand '" + experiment + "'");
    }
    for (const auto& e : file_entries) threads_set = threads_set || e.key == "threads";
  }
  const auto flag_entries = flags.set_entries();
  apply_entries(cfg, flag_entries);
  for (const auto& e : flag_entries) threads_set = threads_set || e.key == "threads";

  if (!threads_set) {
    if (const char* env = std::getenv("CATPROBE_THREADS")) {
      apply_entry(cfg, ConfigEntry{"threads", env, 0, "CATPROBE_THREADS"});
    }
  }
  validate_config(cfg);
  return cfg;
}

class WallClock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

int run_fluctuating_field_cmd(const FlagSet& flags) {
  ExperimentConfig cfg = assemble_config("fluctuating-field", flags);
  WallClock clock;

  FluctuatingFieldParams params;
  params.delta = cfg.delta;
  params.gamma = cfg.gamma;
  params.dt = cfg.dt;
  params.trajectories = cfg.trajectories;
  params.k_max = cfg.kmax;
  params.seed = cfg.seed;
  params.t_max = cfg.tmax;
  params.record_stride = cfg.record_stride;
  params.psi0 = parse_psi0(cfg.psi0);
  params.threads = cfg.threads;
  params.stop_at_stationarity = !cfg.full_span;

  const double rule = default_dt(cfg.delta, cfg.gamma);
  if (cfg.dt > rule) {
    std::cerr << "warning: dt = " << cfg.dt << " exceeds the step rule "
              << "0.02*min(1/delta, 1/gamma) = " << rule << "\n";
  }

  const auto result = run_fluctuating_field(params);

  // Echo the resolved numerics so a re-run of the manifest config reproduces
  // this run exactly.
  cfg.dt = result.dt;
  cfg.tmax = result.t_max;
  cfg.record_stride = result.record_stride;

  RunManifest manifest;
  manifest.config = normalized_config(cfg);
  manifest.stationarity_reached = result.stationarity_reached;
  manifest.stationarity_time = result.report.evaluated_at_time;
  manifest.wall_clock_seconds = clock.seconds();
  write_run_outputs(cfg.out,
                    {{"moments.json", moments_json_fluctuating(result)},
                     {"histogram.csv", histogram_csv(result.report)},
                     {"rho_t.csv", rho_t_csv(result.series)},
                     {"correlator.csv", correlator_csv(result.series)}},
                    std::move(manifest), cfg.experiment);

  std::cout << "fluctuating-field: " << cfg.trajectories << " trajectories, evaluated at t = "
            << result.report.evaluated_at_time
            << (result.stationarity_reached ? " (stationary)" : " (cap reached)") << "\n";
  for (const auto& m : result.report.moments) {
    std::cout << "  <P^" << m.k << "> = " << m.estimate << " +/- " << m.std_error << "\n";
  }
  std::cout << "  correlator = " << result.report.correlator << " +/- "
            << result.report.correlator_std_error
            << ", KS vs uniform = " << result.report.ks_statistic << "\n";
  std::cout << "wrote " << (std::filesystem::path(cfg.out) / "manifest.json").string() << "\n";
  return 0;
}

int run_finite_bath_cmd(const FlagSet& flags) {
  ExperimentConfig cfg = assemble_config("finite-bath", flags);
  WallClock clock;

  FiniteBathParams params;
  params.spec.alpha = cfg.alpha;
  params.spec.omega_c = cfg.omega_c;
  params.spec.n_modes = cfg.modes;
  params.spec.fock_cutoff = cfg.fock_cutoff;
  params.spec.beta = cfg.beta;
  params.spec.dim_cap = cfg.dim_cap;
  params.delta = cfg.delta;
  params.epsilon = cfg.epsilon;
  params.t_grid = parse_time_grid(cfg.tgrid);
  params.k_max = cfg.kmax;
  params.threads = cfg.threads;
  params.t_p = cfg.tp;
  params.compute_asymmetry = cfg.asymmetry;
  if (!cfg.asym_window.empty()) {
    const auto c = cfg.asym_window.find(':');
    params.asym_t_a = std::stod(cfg.asym_window.substr(0, c));
    params.asym_t_b = std::stod(cfg.asym_window.substr(c + 1));
  }
  params.asym_samples = cfg.asym_samples;

  const auto result = run_finite_bath(params);

  RunManifest manifest;
  manifest.config = normalized_config(cfg);
  manifest.wall_clock_seconds = clock.seconds();
  write_run_outputs(cfg.out,
                    {{"moments.json", moments_json_finite_bath(result)},
                     {"histogram.csv", histogram_csv(result.report)},
                     {"correlator.csv", correlator_csv(result.correlator_t)}},
                    std::move(manifest), cfg.experiment);

  std::cout << "finite-bath: dim " << result.hilbert_dim << ", " << result.gibbs_entries
            << " Gibbs entries\n";
  std::cout << "  correlator(t = " << result.correlator_t.back().t
            << ") = " << result.correlator_t.back().correlator << "\n";
  if (result.preparation) {
    std::cout << "  preparation at t_p = " << result.preparation->t_p
              << ": nu_L = " << result.preparation->nu_L
              << ", nu_R = " << result.preparation->nu_R
              << ", branch overlap = " << result.preparation->branch_overlap << "\n";
  }
  if (result.asymmetry) {
    std::cout << "  occupational asymmetry over [" << result.asym_t_a << ", " << result.asym_t_b
              << "] = " << *result.asymmetry << "\n";
  }
  std::cout << "wrote " << (std::filesystem::path(cfg.out) / "manifest.json").string() << "\n";
  return 0;
}

int run_counterexample_cmd(const FlagSet& flags) {
  ExperimentConfig cfg = assemble_config("counterexample", flags);
  WallClock clock;

  const auto result = run_counterexample({cfg.overlap, cfg.nu});
  const std::string payload = counterexample_json(result);

  RunManifest manifest;
  manifest.config = normalized_config(cfg);
  manifest.wall_clock_seconds = clock.seconds();
  write_run_outputs(cfg.out, {{"counterexample.json", payload}}, std::move(manifest),
                    cfg.experiment);

  std::cout << payload;
  std::cout << "wrote " << (std::filesystem::path(cfg.out) / "manifest.json").string() << "\n";
  return 0;
}

int run_synthetic_cmd(const FlagSet& flags) {
  ExperimentConfig cfg = assemble_config("synthetic", flags);
  WallClock clock;

  const auto result = run_synthetic({parse_kind(cfg.kind), cfg.n, cfg.seed, cfg.kmax});

  RunManifest manifest;
  manifest.config = normalized_config(cfg);
  manifest.wall_clock_seconds = clock.seconds();
  write_run_outputs(cfg.out,
                    {{"moments.json", moments_json_synthetic(result, cfg.kind, cfg.n, cfg.seed)},
                     {"histogram.csv", histogram_csv(result.report)}},
                    std::move(manifest), cfg.experiment);

  std::cout << "synthetic " << cfg.kind << " (n = " << cfg.n
            << "): mean = " << result.report.moments.front().estimate
            << ", correlator = " << result.correlator << "\n";
  std::cout << "wrote " << (std::filesystem::path(cfg.out) / "manifest.json").string() << "\n";
  return 0;
}

int run_validate_cmd(const std::string& path) {
  ExperimentConfig cfg;
  const auto entries = parse_config_file(path);
  bool has_experiment = false;
  for (const auto& e : entries) has_experiment = has_experiment || e.key == "experiment";
  if (!has_experiment) {
    throw config_error(path + ": missing required key 'experiment'");
  }
  apply_entries(cfg, entries);
  validate_config(cfg);
  std::cout << "valid configuration (" << path << ")\n";
  for (const auto& [k, v] : normalized_config(cfg)) std::cout << k << "=" << v << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"catprobe: per-realization dynamics and cat-state diagnostics for a noisy "
               "two-level system"};
  app.set_version_flag("--version", catprobe::kVersion);
  app.require_subcommand(1);

  auto* ff = app.add_subcommand("fluctuating-field",
                                "Monte Carlo trajectories under Gaussian white-noise bias");
  FlagSet ff_flags(ff);
  ff_flags.option("delta", "tunneling amplitude");
  ff_flags.option("gamma", "white-noise strength");
  ff_flags.option("dt", "time step (0 = auto rule)");
  ff_flags.option("tmax", "time horizon (0 = auto)");
  ff_flags.option("trajectories", "number of noise realizations");
  ff_flags.option("record-stride", "steps between recorded points (0 = auto)");
  ff_flags.option("psi0", "initial state: L, R, plus, minus, plus_i");
  ff_flags.flag("full-span", "run to tmax even after stationarity");
  add_common_options(ff_flags);

  auto* fb = app.add_subcommand("finite-bath",
                                "exact evolution against a truncated bosonic bath");
  FlagSet fb_flags(fb);
  fb_flags.option("alpha", "dimensionless bath coupling");
  fb_flags.option("omega-c", "bath cutoff frequency");
  fb_flags.option("modes", "number of bath modes");
  fb_flags.option("fock-cutoff", "max occupation per mode");
  fb_flags.option("beta", "inverse temperature");
  fb_flags.option("delta", "tunneling amplitude");
  fb_flags.option("epsilon", "static bias");
  fb_flags.option("tgrid", "evaluation times t0:t1:n (or a single time)");
  fb_flags.option("dim-cap", "Hilbert dimension cap");
  fb_flags.option("tp", "preparation time for the superposed-state diagnostics");
  fb_flags.flag("asymmetry", "compute the windowed occupational asymmetry (needs --tp)");
  fb_flags.option("asym-window", "asymmetry window a:b (default 0.8*t_last : t_last)");
  fb_flags.option("asym-samples", "samples in the asymmetry window");
  add_common_options(fb_flags);

  auto* ce = app.add_subcommand("counterexample",
                                "exact reduced-density computation for orthogonal environments");
  FlagSet ce_flags(ce);
  ce_flags.option("overlap", "environment overlap <Phi_L|Phi_R> in [-1, 1]");
  ce_flags.option("nu", "left amplitude nu_L in [0, 1]");
  add_common_options(ce_flags);

  auto* sy = app.add_subcommand("synthetic", "synthetic collapsed/delocalized/uniform ensembles");
  FlagSet sy_flags(sy);
  sy_flags.option("kind", "collapsed, delocalized, or uniform");
  sy_flags.option("n", "ensemble size");
  add_common_options(sy_flags);

  auto* va = app.add_subcommand("validate", "parse and range-check a config file");
  std::string validate_path;
  va->add_option("config", validate_path, "config file to check")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ff->parsed()) return run_fluctuating_field_cmd(ff_flags);
    if (fb->parsed()) return run_finite_bath_cmd(fb_flags);
    if (ce->parsed()) return run_counterexample_cmd(ce_flags);
    if (sy->parsed()) return run_synthetic_cmd(sy_flags);
    if (va->parsed()) return run_validate_cmd(validate_path);
  } catch (const catprobe::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const catprobe::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const catprobe::error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
