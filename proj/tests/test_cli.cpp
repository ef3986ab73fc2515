#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ldp/config.hpp"

using namespace ldp;
namespace fs = std::filesystem;

namespace {

const char* kBaseConfig = R"({
  "field": {"family": "separable_quadratic", "curvatures": [1.0]},
  "alpha": 1.5,
  "gamma": [5.0],
  "n_grid": [16, 64, 256, 1024],
  "T": 2.0,
  "h": 0.02,
  "seed": 11,
  "workers": 1,
  "output_dir": "OUT",
  "qp_points": [[1.0]],
  "targets": [{"kind": "ball", "center": [0.0], "radius": 5.0}],
  "trials": {"base": 10, "exponent": 0.5, "min_trials": 2000, "max_trials": 4000}
})";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ldp_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string write_config(const fs::path& dir, const std::string& out_name) {
  nlohmann::json j = nlohmann::json::parse(kBaseConfig);
  j["output_dir"] = (dir / out_name).string();
  const fs::path p = dir / (out_name + "_config.json");
  std::ofstream(p) << j.dump(2);
  return p.string();
}

int run(const std::string& args) {
  const std::string cmd = std::string(LDP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ostringstream ss;
  ss << std::ifstream(p).rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config round-trips through JSON losslessly") {
  const auto j = nlohmann::json::parse(kBaseConfig);
  const ExperimentConfig cfg = config_from_json(j);
  CHECK(cfg.alpha == 1.5);
  CHECK(cfg.scalar_gamma() == 5.0);
  CHECK(cfg.n_grid.size() == 4);
  CHECK(cfg.trials.min_trials == 2000);
  const auto j2 = to_json(cfg);
  const ExperimentConfig cfg2 = config_from_json(j2);
  CHECK(to_json(cfg2) == j2);
}

TEST_CASE("schema errors name the offending key") {
  auto j = nlohmann::json::parse(kBaseConfig);
  j.erase("field");
  try {
    config_from_json(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("field") != std::string::npos);
  }

  auto bad = nlohmann::json::parse(kBaseConfig);
  bad["alpha"] = 2.5;
  CHECK_THROWS_AS((void)config_from_json(bad).validate(), std::exception);
}

TEST_CASE("simulate writes the documented CSV layout") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path, "sim");
  REQUIRE(run("simulate --config " + cfg + " --count 2") == 0);

  std::ifstream csv(tmp.path / "sim" / "paths.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "run_id,t,x1");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 2 * 101);  // two runs, T/h + 1 states each

  std::ifstream noise(tmp.path / "sim" / "paths_noise.csv");
  std::getline(noise, header);
  CHECK(header == "run_id,t,dw1,dl1");
}

TEST_CASE("simulate with count zero leaves only the header") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path, "empty");
  REQUIRE(run("simulate --config " + cfg + " --count 0") == 0);
  CHECK(slurp(tmp.path / "empty" / "paths.csv") == "run_id,t,x1\n");
}

TEST_CASE("reruns are byte-identical") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path, "a");
  REQUIRE(run("simulate --config " + cfg + " --count 3") == 0);
  REQUIRE(run("simulate --config " + cfg + " --count 3 --out " +
              (tmp.path / "b").string()) == 0);
  CHECK(slurp(tmp.path / "a" / "paths.csv") == slurp(tmp.path / "b" / "paths.csv"));
  CHECK(slurp(tmp.path / "a" / "paths_noise.csv") ==
        slurp(tmp.path / "b" / "paths_noise.csv"));

  // A different seed changes the draws.
  REQUIRE(run("simulate --config " + cfg + " --count 3 --seed 999 --out " +
              (tmp.path / "c").string()) == 0);
  CHECK(slurp(tmp.path / "a" / "paths.csv") != slurp(tmp.path / "c" / "paths.csv"));
}

TEST_CASE("qp reports values and oracle agreement") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path, "qp");
  REQUIRE(run("qp --config " + cfg) == 0);
  const auto rep = nlohmann::json::parse(slurp(tmp.path / "qp" / "qp_report.json"));
  REQUIRE(rep.is_array());
  REQUIRE(rep.size() == 1);
  CHECK(rep[0]["converged"].get<bool>());
  CHECK(rep[0]["value"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rep[0]["oracle"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("verify emits the estimates CSV contract") {
  TempDir tmp;
  const std::string cfg = write_config(tmp.path, "ver");
  REQUIRE(run("verify --config " + cfg) == 0);
  std::ifstream csv(tmp.path / "ver" / "target0_estimates.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "n,trials,hits,p_hat,ci_low,ci_high");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 4);
  const auto rep = nlohmann::json::parse(slurp(tmp.path / "ver" / "target0_report.json"));
  CHECK(rep["slope_valid"].get<bool>());
}

TEST_CASE("exit codes distinguish validation failures") {
  TempDir tmp;
  // Malformed config: missing required keys.
  const fs::path bad = tmp.path / "bad.json";
  std::ofstream(bad) << "{\"alpha\": 1.5}";
  CHECK(run("qp --config " + bad.string()) == 1);
  // Nonexistent file.
  CHECK(run("qp --config " + (tmp.path / "missing.json").string()) != 0);
}
