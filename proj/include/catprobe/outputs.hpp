#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "catprobe/config.hpp"
#include "catprobe/errors.hpp"
#include "catprobe/experiments.hpp"
#include "catprobe/version.hpp"

// Machine-readable outputs. Schemas are versioned and documented in the
// README; CSV numbers are printed with %.17g so every double round-trips.
// Files are written atomically (temp file + rename); the manifest carries a
// checksum of every other output and is always written last.

namespace catprobe {

class io_error : public error {
 public:
  explicit io_error(const std::string& what) : error(what) {}
};

inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw io_error("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

namespace detail {

inline nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

inline nlohmann::json report_json(const MomentReport& rep) {
  nlohmann::json j;
  j["evaluated_at_time"] = finite_or_null(rep.evaluated_at_time);
  j["n_samples"] = rep.n_samples;
  j["n_eff"] = rep.n_eff;
  nlohmann::json moments = nlohmann::json::array();
  for (const auto& m : rep.moments) {
    moments.push_back({{"k", m.k}, {"estimate", m.estimate}, {"std_error", m.std_error}});
  }
  j["moments"] = std::move(moments);
  j["correlator"] = rep.correlator;
  j["correlator_std_error"] = rep.correlator_std_error;
  j["ks_statistic"] = finite_or_null(rep.ks_statistic);
  return j;
}

}  // namespace detail

inline std::string histogram_csv(const MomentReport& rep) {
  std::string out = "bin_left,bin_right,density\n";
  for (const auto& bin : rep.histogram) {
    out += fmt_g17(bin.left);
    out += ',';
    out += fmt_g17(bin.right);
    out += ',';
    out += fmt_g17(bin.density);
    out += '\n';
  }
  return out;
}

inline std::string rho_t_csv(const std::vector<RecordPoint>& series) {
  std::string out = "t,rho_LL,re_rho_LR,im_rho_LR\n";
  for (const auto& p : series) {
    out += fmt_g17(p.t);
    out += ',';
    out += fmt_g17(p.rho_ll);
    out += ',';
    out += fmt_g17(p.re_rho_lr);
    out += ',';
    out += fmt_g17(p.im_rho_lr);
    out += '\n';
  }
  return out;
}

inline std::string correlator_csv(const std::vector<RecordPoint>& series) {
  std::string out = "t,correlator,n_eff\n";
  for (const auto& p : series) {
    out += fmt_g17(p.t);
    out += ',';
    out += fmt_g17(p.correlator);
    out += ',';
    out += fmt_g17(p.n_eff);
    out += '\n';
  }
  return out;
}

inline std::string correlator_csv(const std::vector<BathCorrelatorPoint>& series) {
  std::string out = "t,correlator,n_eff\n";
  for (const auto& p : series) {
    out += fmt_g17(p.t);
    out += ',';
    out += fmt_g17(p.correlator);
    out += ',';
    out += fmt_g17(p.n_eff);
    out += '\n';
  }
  return out;
}

inline std::string moments_json_fluctuating(const FluctuatingFieldResult& result) {
  nlohmann::json j = detail::report_json(result.report);
  j["schema"] = "catprobe.moments.v1";
  j["artifact_version"] = kVersion;
  j["experiment"] = "fluctuating-field";
  j["stationarity"] = {{"reached", result.stationarity_reached},
                       {"time", detail::finite_or_null(result.report.evaluated_at_time)}};
  nlohmann::json vs_time = nlohmann::json::array();
  for (const auto& mt : result.moments_vs_time) {
    vs_time.push_back({{"t", mt.t}, {"estimate", mt.estimate}});
  }
  j["moments_vs_time"] = std::move(vs_time);
  j["numerics"] = {{"dt", result.dt},
                   {"t_max", result.t_max},
                   {"n_steps", result.n_steps},
                   {"record_stride", result.record_stride},
                   {"max_norm_error", result.max_norm_error}};
  return j.dump(2) + "\n";
}

inline std::string moments_json_finite_bath(const FiniteBathResult& result) {
  nlohmann::json j = detail::report_json(result.report);
  j["schema"] = "catprobe.moments.v1";
  j["artifact_version"] = kVersion;
  j["experiment"] = "finite-bath";
  nlohmann::json bath;
  bath["hilbert_dim"] = result.hilbert_dim;
  bath["gibbs_entries"] = result.gibbs_entries;
  if (result.preparation) {
    bath["preparation"] = {{"t_p", result.preparation->t_p},
                           {"nu_L", result.preparation->nu_L},
                           {"nu_R", result.preparation->nu_R},
                           {"branch_overlap", result.preparation->branch_overlap}};
  }
  if (result.asymmetry) {
    bath["asymmetry"] = {{"value", *result.asymmetry},
                         {"window", {result.asym_t_a, result.asym_t_b}},
                         {"samples", result.asym_samples}};
  }
  j["finite_bath"] = std::move(bath);
  return j.dump(2) + "\n";
}

inline std::string moments_json_synthetic(const SyntheticResult& result, const std::string& kind,
                                          std::uint64_t n, std::uint64_t seed) {
  nlohmann::json j = detail::report_json(result.report);
  j["schema"] = "catprobe.moments.v1";
  j["artifact_version"] = kVersion;
  j["experiment"] = "synthetic";
  j["correlator"] = result.correlator;  // direct route, exact for the point scenarios
  j["synthetic"] = {{"kind", kind},
                    {"n", n},
                    {"seed", seed},
                    {"averaged_rho",
                     {{"rho_LL", result.averaged_rho.ll.real()},
                      {"re_rho_LR", result.averaged_rho.lr.real()},
                      {"im_rho_LR", result.averaged_rho.lr.imag()},
                      {"rho_RR", result.averaged_rho.rr.real()}}}};
  return j.dump(2) + "\n";
}

inline std::string counterexample_json(const CounterexampleResult& result) {
  nlohmann::json j;
  j["schema"] = "catprobe.counterexample.v1";
  j["artifact_version"] = kVersion;
  j["experiment"] = "counterexample";
  j["nu_L"] = result.nu_L;
  j["nu_R"] = result.nu_R;
  j["overlap"] = result.overlap;
  j["rho_LL"] = result.rho_ll;
  j["rho_RR"] = result.rho_rr;
  j["re_rho_LR"] = result.rho_lr.real();
  j["im_rho_LR"] = result.rho_lr.imag();
  j["rho_LR_abs"] = result.rho_lr_abs;
  return j.dump(2) + "\n";
}

struct RunManifest {
  std::vector<std::pair<std::string, std::string>> config;  // normalized echo
  double wall_clock_seconds = 0.0;
  std::optional<bool> stationarity_reached;
  std::optional<double> stationarity_time;
  std::vector<std::pair<std::string, std::string>> output_checksums;  // file -> fnv1a64
};

inline std::string manifest_json(const RunManifest& manifest, const std::string& experiment) {
  nlohmann::json j;
  j["schema"] = "catprobe.manifest.v1";
  j["artifact_version"] = kVersion;
  j["experiment"] = experiment;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : manifest.config) cfg[k] = v;
  j["config"] = std::move(cfg);
  j["wall_clock_seconds"] = manifest.wall_clock_seconds;
  if (manifest.stationarity_reached) {
    j["stationarity"] = {{"reached", *manifest.stationarity_reached},
                         {"time", manifest.stationarity_time ? nlohmann::json(*manifest.stationarity_time)
                                                             : nlohmann::json(nullptr)}};
  } else {
    j["stationarity"] = nullptr;
  }
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& [file, sum] : manifest.output_checksums) outputs[file] = "fnv1a64:" + sum;
  j["outputs"] = std::move(outputs);
  return j.dump(2) + "\n";
}

// Writes the named payloads atomically into out_dir, then the manifest (with
// checksums of everything just written) last.
inline void write_run_outputs(const std::filesystem::path& out_dir,
                              const std::vector<std::pair<std::string, std::string>>& files,
                              RunManifest manifest, const std::string& experiment) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
  for (const auto& [name, content] : files) {
    write_atomic(out_dir / name, content);
    manifest.output_checksums.emplace_back(name, fnv1a64_hex(content));
  }
  write_atomic(out_dir / "manifest.json", manifest_json(manifest, experiment));
}

}  // namespace catprobe
