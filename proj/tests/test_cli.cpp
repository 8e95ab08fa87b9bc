#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

// End-to-end checks of the command-line runner: exit codes, config
// diagnostics, schema stability against golden files, and bit-identical
// outputs across worker counts.

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
  const char* env = std::getenv("CATPROBE_CLI");
  REQUIRE(env != nullptr);
  return env;
}

std::string golden_dir() {
  const char* env = std::getenv("CATPROBE_GOLDEN_DIR");
  REQUIRE(env != nullptr);
  return env;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "catprobe_cli_log.txt";
  const std::string cmd = cli_path() + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  result.output = ss.str();
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_config(const fs::path& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

}  // namespace

TEST_CASE("validate accepts a well-formed config and echoes it") {
  const auto dir = fresh_dir("catprobe_validate_ok");
  const auto cfg = dir / "run.cfg";
  write_config(cfg,
               "# moments run\n"
               "experiment = fluctuating-field\n"
               "delta = 1.0\n"
               "gamma = 1.0\n"
               "dt = 0.01\n"
               "trajectories = 1000\n"
               "seed = 42\n");
  const auto r = run_cli("validate " + cfg.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("valid configuration") != std::string::npos);
  CHECK(r.output.find("experiment=fluctuating-field") != std::string::npos);
  CHECK(r.output.find("seed=42") != std::string::npos);
}

TEST_CASE("validate rejects a negative noise strength naming the field") {
  const auto dir = fresh_dir("catprobe_validate_gamma");
  const auto cfg = dir / "bad.cfg";
  write_config(cfg, "experiment = fluctuating-field\ngamma = -1\n");
  const auto r = run_cli("validate " + cfg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("gamma") != std::string::npos);
}

TEST_CASE("validate rejects an oversized bath with the computed dimension") {
  const auto dir = fresh_dir("catprobe_validate_cap");
  const auto cfg = dir / "big.cfg";
  write_config(cfg, "experiment = finite-bath\nmodes = 10\nfock-cutoff = 4\n");
  const auto r = run_cli("validate " + cfg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("19531250") != std::string::npos);
}

TEST_CASE("unknown and duplicate config keys are rejected with their line") {
  const auto dir = fresh_dir("catprobe_validate_unknown");
  const auto cfg = dir / "odd.cfg";
  write_config(cfg, "experiment = synthetic\nwibble = 3\n");
  auto r = run_cli("validate " + cfg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find(":2") != std::string::npos);
  CHECK(r.output.find("wibble") != std::string::npos);

  write_config(cfg, "experiment = synthetic\nn = 10\nn = 20\n");
  r = run_cli("validate " + cfg.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("duplicate") != std::string::npos);
}

TEST_CASE("flags override config file values") {
  const auto dir = fresh_dir("catprobe_flags_win");
  const auto cfg = dir / "run.cfg";
  write_config(cfg, "experiment = synthetic\nkind = delocalized\nn = 100\n");
  const auto r =
      run_cli("synthetic --config " + cfg.string() + " --kind collapsed --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  CHECK(manifest["config"]["kind"] == "collapsed");
  CHECK(manifest["config"]["n"] == "100");
}

TEST_CASE("synthetic run matches the golden outputs byte for byte") {
  const auto dir = fresh_dir("catprobe_golden");
  const auto r = run_cli("synthetic --kind uniform --n 64 --seed 7 --kmax 3 --out " +
                         dir.string());
  REQUIRE(r.exit_code == 0);
  const std::string moments = read_file(dir / "moments.json");
  const std::string histogram = read_file(dir / "histogram.csv");
  CHECK(moments == read_file(fs::path(golden_dir()) / "synthetic_moments.json"));
  CHECK(histogram == read_file(fs::path(golden_dir()) / "synthetic_histogram.csv"));
}

TEST_CASE("counterexample emits the advertised JSON values") {
  const auto dir = fresh_dir("catprobe_ce");
  const auto r = run_cli("counterexample --overlap 0 --nu 0.7071 --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  const auto j = nlohmann::json::parse(read_file(dir / "counterexample.json"));
  CHECK(j["rho_LR_abs"].get<double>() <= 1e-15);
  CHECK(j["nu_L"].get<double>() == Catch::Approx(0.7071));
  CHECK(j["nu_R"].get<double>() == Catch::Approx(0.7071).margin(1e-4));
  CHECK(j["schema"] == "catprobe.counterexample.v1");
}

TEST_CASE("outputs are bit-identical across worker counts and reruns") {
  const std::string params =
      " --delta 1 --gamma 1 --dt 0.02 --tmax 10 --trajectories 512 --kmax 4 --seed 5 "
      "--record-stride 50 --full-span --out ";
  const auto d1 = fresh_dir("catprobe_det_t1");
  const auto d4 = fresh_dir("catprobe_det_t4");
  const auto d1b = fresh_dir("catprobe_det_t1b");
  REQUIRE(run_cli("fluctuating-field --threads 1" + params + d1.string()).exit_code == 0);
  REQUIRE(run_cli("fluctuating-field --threads 4" + params + d4.string()).exit_code == 0);
  REQUIRE(run_cli("fluctuating-field --threads 1" + params + d1b.string()).exit_code == 0);

  for (const char* name : {"moments.json", "histogram.csv", "rho_t.csv", "correlator.csv"}) {
    INFO(name);
    const std::string a = read_file(d1 / name);
    REQUIRE(a == read_file(d4 / name));
    REQUIRE(a == read_file(d1b / name));
  }
  // manifests agree on config and checksums (wall clock may differ)
  const auto m1 = nlohmann::json::parse(read_file(d1 / "manifest.json"));
  const auto m4 = nlohmann::json::parse(read_file(d4 / "manifest.json"));
  CHECK(m1["outputs"] == m4["outputs"]);
  CHECK(m1["config"]["seed"] == m4["config"]["seed"]);
  CHECK(m1["config"]["dt"] == m4["config"]["dt"]);
}

TEST_CASE("CATPROBE_THREADS mirrors --threads") {
  const std::string params =
      " --delta 1 --gamma 1 --dt 0.02 --tmax 5 --trajectories 256 --kmax 2 --seed 9 "
      "--record-stride 50 --full-span --out ";
  const auto d_env = fresh_dir("catprobe_env_threads");
  const auto d_flag = fresh_dir("catprobe_flag_threads");
  const std::string env_cmd = "CATPROBE_THREADS=3 " + cli_path() + " fluctuating-field" +
                              params + d_env.string() + " > /dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
  REQUIRE(run_cli("fluctuating-field --threads 3" + params + d_flag.string()).exit_code == 0);
  CHECK(read_file(d_env / "moments.json") == read_file(d_flag / "moments.json"));
  const auto manifest = nlohmann::json::parse(read_file(d_env / "manifest.json"));
  CHECK(manifest["config"]["threads"] == "3");
}

TEST_CASE("finite-bath run writes the correlator grid") {
  const auto dir = fresh_dir("catprobe_bath");
  const auto r = run_cli(
      "finite-bath --alpha 0.5 --omega-c 5 --modes 2 --fock-cutoff 1 --beta 0.2 --delta 1 "
      "--tgrid 0.5:3:6 --tp 1.7 --asymmetry --out " +
      dir.string());
  REQUIRE(r.exit_code == 0);
  const std::string corr = read_file(dir / "correlator.csv");
  CHECK(corr.rfind("t,correlator,n_eff\n", 0) == 0);
  // 6 grid points + header
  CHECK(std::count(corr.begin(), corr.end(), '\n') == 7);
  const auto j = nlohmann::json::parse(read_file(dir / "moments.json"));
  CHECK(j["finite_bath"]["hilbert_dim"] == 8);
  CHECK(j["finite_bath"]["preparation"]["nu_L"].get<double>() > 0.0);
  CHECK(j["finite_bath"].contains("asymmetry"));
}

TEST_CASE("missing output directory triggers the io exit code") {
  const auto r = run_cli("synthetic --kind collapsed --n 100 --out /proc/invalid/nope");
  CHECK(r.exit_code == 4);
}
