#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "catprobe/errors.hpp"
#include "catprobe/experiments.hpp"

// Flat key=value experiment configuration. A run is described by a config
// file, by CLI flags, or by both; flags win over file values. Keys are the
// long option names of the CLI (see README for the full table). Unknown and
// duplicate keys are rejected with the offending line.

namespace catprobe {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;  // 0 for CLI-provided entries
  std::string source = "flag";
};

inline std::vector<ConfigEntry> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::vector<ConfigEntry> entries;
  std::string raw;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string stripped = trim(raw);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw config_error(path + ":" + std::to_string(line_no) +
                         ": expected key=value, got '" + stripped + "'");
    }
    ConfigEntry entry;
    entry.key = trim(stripped.substr(0, eq));
    entry.value = trim(stripped.substr(eq + 1));
    entry.line = line_no;
    entry.source = path;
    if (entry.key.empty()) {
      throw config_error(path + ":" + std::to_string(line_no) + ": empty key");
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

struct ExperimentConfig {
  std::string experiment;  // fluctuating-field | finite-bath | counterexample | synthetic
  // model parameters
  double delta = 1.0;
  double epsilon = 0.0;
  double gamma = 1.0;
  double alpha = 0.0;
  double omega_c = 5.0;
  int modes = 4;
  int fock_cutoff = 2;
  double beta = 1.0;
  // numerics
  double dt = 0.0;                  // 0: auto
  double tmax = 0.0;                // 0: auto
  std::uint64_t trajectories = 10000;
  int kmax = 4;
  std::uint64_t seed = 0;
  std::uint64_t record_stride = 0;  // 0: auto
  std::string tgrid = "0.5:10:20";  // t0:t1:n or a single time
  std::string psi0 = "L";
  bool full_span = false;
  std::uint64_t dim_cap = 16384;
  std::optional<double> tp;
  bool asymmetry = false;
  std::string asym_window;          // a:b, empty: auto
  int asym_samples = 64;
  // counterexample / synthetic
  double overlap = 0.0;
  double nu = M_SQRT1_2;
  std::string kind = "collapsed";
  std::uint64_t n = 1000;
  // execution
  unsigned threads = 0;             // 0: CATPROBE_THREADS or hardware
  std::string out = ".";
};

namespace detail {

inline std::string where(const ConfigEntry& e) {
  if (e.line > 0) return e.source + ":" + std::to_string(e.line) + ": ";
  return "--" + e.key + ": ";
}

inline double parse_double(const ConfigEntry& e) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(e.value, &pos);
  } catch (const std::exception&) {
    throw config_error(where(e) + "'" + e.value + "' is not a number");
  }
  if (pos != e.value.size()) throw config_error(where(e) + "'" + e.value + "' is not a number");
  return v;
}

inline std::uint64_t parse_u64(const ConfigEntry& e) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(e.value, &pos);
  } catch (const std::exception&) {
    throw config_error(where(e) + "'" + e.value + "' is not a non-negative integer");
  }
  if (pos != e.value.size() || e.value.front() == '-') {
    throw config_error(where(e) + "'" + e.value + "' is not a non-negative integer");
  }
  return v;
}

inline int parse_int(const ConfigEntry& e) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(e.value, &pos);
  } catch (const std::exception&) {
    throw config_error(where(e) + "'" + e.value + "' is not an integer");
  }
  if (pos != e.value.size()) throw config_error(where(e) + "'" + e.value + "' is not an integer");
  return v;
}

inline bool parse_bool(const ConfigEntry& e) {
  std::string v = e.value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw config_error(where(e) + "'" + e.value + "' is not a boolean");
}

}  // namespace detail

inline void apply_entry(ExperimentConfig& cfg, const ConfigEntry& e) {
  using namespace detail;
  if (e.key == "experiment") cfg.experiment = e.value;
  else if (e.key == "delta") cfg.delta = parse_double(e);
  else if (e.key == "epsilon") cfg.epsilon = parse_double(e);
  else if (e.key == "gamma") cfg.gamma = parse_double(e);
  else if (e.key == "alpha") cfg.alpha = parse_double(e);
  else if (e.key == "omega-c") cfg.omega_c = parse_double(e);
  else if (e.key == "modes") cfg.modes = parse_int(e);
  else if (e.key == "fock-cutoff") cfg.fock_cutoff = parse_int(e);
  else if (e.key == "beta") cfg.beta = parse_double(e);
  else if (e.key == "dt") cfg.dt = parse_double(e);
  else if (e.key == "tmax") cfg.tmax = parse_double(e);
  else if (e.key == "trajectories") cfg.trajectories = parse_u64(e);
  else if (e.key == "kmax") cfg.kmax = parse_int(e);
  else if (e.key == "seed") cfg.seed = parse_u64(e);
  else if (e.key == "record-stride") cfg.record_stride = parse_u64(e);
  else if (e.key == "tgrid") cfg.tgrid = e.value;
  else if (e.key == "psi0") cfg.psi0 = e.value;
  else if (e.key == "full-span") cfg.full_span = parse_bool(e);
  else if (e.key == "dim-cap") cfg.dim_cap = parse_u64(e);
  else if (e.key == "tp") cfg.tp = parse_double(e);
  else if (e.key == "asymmetry") cfg.asymmetry = parse_bool(e);
  else if (e.key == "asym-window") cfg.asym_window = e.value;
  else if (e.key == "asym-samples") cfg.asym_samples = parse_int(e);
  else if (e.key == "overlap") cfg.overlap = parse_double(e);
  else if (e.key == "nu") cfg.nu = parse_double(e);
  else if (e.key == "kind") cfg.kind = e.value;
  else if (e.key == "n") cfg.n = parse_u64(e);
  else if (e.key == "threads") cfg.threads = static_cast<unsigned>(parse_u64(e));
  else if (e.key == "out") cfg.out = e.value;
  else throw config_error(detail::where(e) + "unknown key '" + e.key + "'");
}

inline void apply_entries(ExperimentConfig& cfg, const std::vector<ConfigEntry>& entries) {
  std::map<std::string, int> seen;
  for (const auto& e : entries) {
    const auto [it, fresh] = seen.emplace(e.key, e.line);
    if (!fresh) {
      throw config_error(detail::where(e) + "duplicate key '" + e.key + "' (first at line " +
                         std::to_string(it->second) + ")");
    }
    apply_entry(cfg, e);
  }
}

inline std::vector<double> parse_time_grid(const std::string& text) {
  const auto c1 = text.find(':');
  if (c1 == std::string::npos) {
    const ConfigEntry e{"tgrid", text, 0, "flag"};
    return {detail::parse_double(e)};
  }
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string::npos) {
    throw config_error("tgrid: expected t0:t1:n or a single time, got '" + text + "'");
  }
  const ConfigEntry e0{"tgrid", text.substr(0, c1), 0, "flag"};
  const ConfigEntry e1{"tgrid", text.substr(c1 + 1, c2 - c1 - 1), 0, "flag"};
  const ConfigEntry en{"tgrid", text.substr(c2 + 1), 0, "flag"};
  const double t0 = detail::parse_double(e0);
  const double t1 = detail::parse_double(e1);
  const std::uint64_t n = detail::parse_u64(en);
  if (n < 2) throw config_error("tgrid: need at least 2 points in t0:t1:n");
  if (!(t1 > t0)) throw config_error("tgrid: need t1 > t0");
  std::vector<double> grid(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    grid[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return grid;
}

inline TwoLevelState parse_psi0(const std::string& name) {
  if (name == "L") return TwoLevelState::left();
  if (name == "R") return TwoLevelState::right();
  if (name == "plus") return TwoLevelState::plus();
  if (name == "minus") return TwoLevelState::minus();
  if (name == "plus_i") return TwoLevelState::plus_i();
  throw config_error("psi0: unknown state '" + name + "' (use L, R, plus, minus, plus_i)");
}

inline ScenarioKind parse_kind(const std::string& name) {
  if (name == "collapsed") return ScenarioKind::collapsed;
  if (name == "delocalized") return ScenarioKind::delocalized;
  if (name == "uniform") return ScenarioKind::uniform;
  throw config_error("kind: unknown scenario '" + name +
                     "' (use collapsed, delocalized, uniform)");
}

// Range-checks every field and resolves the derived pieces; throws
// config_error naming the offending field.
inline void validate_config(const ExperimentConfig& cfg) {
  static const std::vector<std::string> kExperiments{"fluctuating-field", "finite-bath",
                                                     "counterexample", "synthetic"};
  if (std::find(kExperiments.begin(), kExperiments.end(), cfg.experiment) ==
      kExperiments.end()) {
    throw config_error("experiment: expected one of fluctuating-field, finite-bath, "
                       "counterexample, synthetic; got '" +
                       cfg.experiment + "'");
  }
  if (!(cfg.delta >= 0.0)) throw config_error("delta: must be >= 0 (got " + std::to_string(cfg.delta) + ")");
  if (!(cfg.gamma >= 0.0)) throw config_error("gamma: must be >= 0 (got " + std::to_string(cfg.gamma) + ")");
  if (!(cfg.alpha >= 0.0)) throw config_error("alpha: must be >= 0 (got " + std::to_string(cfg.alpha) + ")");
  if (!(cfg.omega_c > 0.0)) throw config_error("omega-c: must be > 0 (got " + std::to_string(cfg.omega_c) + ")");
  if (cfg.modes < 1) throw config_error("modes: must be >= 1 (got " + std::to_string(cfg.modes) + ")");
  if (cfg.fock_cutoff < 1) throw config_error("fock-cutoff: must be >= 1 (got " + std::to_string(cfg.fock_cutoff) + ")");
  if (!(cfg.beta > 0.0)) throw config_error("beta: must be > 0 (got " + std::to_string(cfg.beta) + ")");
  if (!(cfg.dt >= 0.0)) throw config_error("dt: must be >= 0, 0 meaning auto (got " + std::to_string(cfg.dt) + ")");
  if (!(cfg.tmax >= 0.0)) throw config_error("tmax: must be >= 0, 0 meaning auto (got " + std::to_string(cfg.tmax) + ")");
  if (cfg.kmax < 1) throw config_error("kmax: must be >= 1 (got " + std::to_string(cfg.kmax) + ")");
  if (cfg.asym_samples < 1) throw config_error("asym-samples: must be >= 1");
  if (!(cfg.overlap >= -1.0 && cfg.overlap <= 1.0)) {
    throw config_error("overlap: must lie in [-1, 1] (got " + std::to_string(cfg.overlap) + ")");
  }
  if (!(cfg.nu >= 0.0 && cfg.nu <= 1.0)) {
    throw config_error("nu: must lie in [0, 1] (got " + std::to_string(cfg.nu) + ")");
  }
  parse_kind(cfg.kind);
  parse_psi0(cfg.psi0);
  parse_time_grid(cfg.tgrid);
  if (cfg.tp && !(*cfg.tp >= 0.0)) throw config_error("tp: must be >= 0");
  if (!cfg.asym_window.empty()) {
    const auto c = cfg.asym_window.find(':');
    if (c == std::string::npos) throw config_error("asym-window: expected a:b");
    const ConfigEntry ea{"asym-window", cfg.asym_window.substr(0, c), 0, "flag"};
    const ConfigEntry eb{"asym-window", cfg.asym_window.substr(c + 1), 0, "flag"};
    const double a = detail::parse_double(ea);
    const double b = detail::parse_double(eb);
    if (!(a >= 0.0 && b > a)) throw config_error("asym-window: need 0 <= a < b");
  }
  if (cfg.experiment == "fluctuating-field" && cfg.trajectories < 2) {
    throw config_error("trajectories: must be >= 2 (got " + std::to_string(cfg.trajectories) + ")");
  }
  if (cfg.experiment == "synthetic" && cfg.n < 2) {
    throw config_error("n: must be >= 2 (got " + std::to_string(cfg.n) + ")");
  }

  // Hilbert-space cap, reported with the computed dimension.
  std::uint64_t env_dim = 1;
  bool overflow = false;
  for (int i = 0; i < cfg.modes; ++i) {
    env_dim *= static_cast<std::uint64_t>(cfg.fock_cutoff) + 1;
    if (env_dim > (std::uint64_t{1} << 62)) {
      overflow = true;
      break;
    }
  }
  if (cfg.experiment == "finite-bath" && (overflow || 2 * env_dim > cfg.dim_cap)) {
    throw config_error("modes/fock-cutoff: total Hilbert dimension " +
                       (overflow ? std::string("overflows") : std::to_string(2 * env_dim)) +
                       " exceeds dim-cap " + std::to_string(cfg.dim_cap));
  }
}

inline std::string format_double_key(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Canonical key=value listing for manifests and `validate` output. Keys are
// restricted to the ones the experiment consumes.
inline std::vector<std::pair<std::string, std::string>> normalized_config(
    const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("experiment", cfg.experiment);
  auto add_d = [&kv](const char* k, double v) { kv.emplace_back(k, format_double_key(v)); };
  auto add_u = [&kv](const char* k, std::uint64_t v) { kv.emplace_back(k, std::to_string(v)); };
  if (cfg.experiment == "fluctuating-field") {
    add_d("delta", cfg.delta);
    add_d("gamma", cfg.gamma);
    add_d("dt", cfg.dt);
    add_d("tmax", cfg.tmax);
    add_u("trajectories", cfg.trajectories);
    add_u("kmax", static_cast<std::uint64_t>(cfg.kmax));
    add_u("seed", cfg.seed);
    add_u("record-stride", cfg.record_stride);
    kv.emplace_back("psi0", cfg.psi0);
    kv.emplace_back("full-span", cfg.full_span ? "true" : "false");
  } else if (cfg.experiment == "finite-bath") {
    add_d("alpha", cfg.alpha);
    add_d("omega-c", cfg.omega_c);
    add_u("modes", static_cast<std::uint64_t>(cfg.modes));
    add_u("fock-cutoff", static_cast<std::uint64_t>(cfg.fock_cutoff));
    add_d("beta", cfg.beta);
    add_d("delta", cfg.delta);
    add_d("epsilon", cfg.epsilon);
    kv.emplace_back("tgrid", cfg.tgrid);
    add_u("kmax", static_cast<std::uint64_t>(cfg.kmax));
    add_u("dim-cap", cfg.dim_cap);
    if (cfg.tp) add_d("tp", *cfg.tp);
    kv.emplace_back("asymmetry", cfg.asymmetry ? "true" : "false");
    if (!cfg.asym_window.empty()) kv.emplace_back("asym-window", cfg.asym_window);
    add_u("asym-samples", static_cast<std::uint64_t>(cfg.asym_samples));
  } else if (cfg.experiment == "counterexample") {
    add_d("overlap", cfg.overlap);
    add_d("nu", cfg.nu);
  } else if (cfg.experiment == "synthetic") {
    kv.emplace_back("kind", cfg.kind);
    add_u("n", cfg.n);
    add_u("seed", cfg.seed);
    add_u("kmax", static_cast<std::uint64_t>(cfg.kmax));
  }
  kv.emplace_back("threads", std::to_string(cfg.threads));
  kv.emplace_back("out", cfg.out);
  return kv;
}

}  // namespace catprobe
