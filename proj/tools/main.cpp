// Batch front end: simulate paths, evaluate the quasipotential, run the
// Monte Carlo slope verification, or self-test the numerical kernels.

#include <CLI11.hpp>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "ldp/config.hpp"
#include "ldp/quasipotential.hpp"
#include "ldp/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ldp;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

ExperimentConfig load_with_overrides(const std::string& path, const Overrides& ov) {
  ExperimentConfig cfg = load_config(path);
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.workers) cfg.workers = *ov.workers;
  if (ov.out) cfg.output_dir = *ov.out;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot open output file: " + p.string());
  return f;
}

int cmd_simulate(const ExperimentConfig& cfg, long long count, bool no_noise) {
  const DriftField field = cfg.field.build();
  const int p = field.dimension();
  const AlphaStableParams alpha(cfg.alpha);
  NoiseScale scale = no_noise ? NoiseScale::noiseless()
                              : NoiseScale(cfg.n_grid.front(), cfg.scalar_gamma());
  fs::create_directories(cfg.output_dir);

  auto paths_csv = open_out(fs::path(cfg.output_dir) / "paths.csv");
  auto noise_csv = open_out(fs::path(cfg.output_dir) / "paths_noise.csv");
  paths_csv << "run_id,t";
  for (int i = 1; i <= p; ++i) paths_csv << ",x" << i;
  paths_csv << "\n";
  noise_csv << "run_id,t";
  for (int i = 1; i <= p; ++i) noise_csv << ",dw" << i;
  for (int i = 1; i <= p; ++i) noise_csv << ",dl" << i;
  noise_csv << "\n";

  for (long long run = 0; run < count; ++run) {
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(run));
    const SdePath path =
        simulate_sde(field, Vec::Zero(p), scale, alpha, cfg.T, cfg.h, rng);
    for (std::size_t k = 0; k < path.states.size(); ++k) {
      paths_csv << run << ',' << fmt(path.times[k]);
      for (int i = 0; i < p; ++i) paths_csv << ',' << fmt(path.states[k][i]);
      paths_csv << '\n';
      if (k + 1 < path.states.size()) {
        noise_csv << run << ',' << fmt(path.times[k]);
        for (int i = 0; i < p; ++i) noise_csv << ',' << fmt(path.gaussian_increments[k][i]);
        for (int i = 0; i < p; ++i) noise_csv << ',' << fmt(path.stable_increments[k][i]);
        noise_csv << '\n';
      }
    }
  }
  std::cout << "wrote " << count << " path(s) to " << cfg.output_dir << "/paths.csv\n";
  return 0;
}

int cmd_qp(const ExperimentConfig& cfg, const std::vector<std::vector<double>>& extra_x) {
  const DriftField field = cfg.field.build();
  const AlphaStableParams alpha(cfg.alpha);
  const double gamma = cfg.scalar_gamma();
  std::vector<std::vector<double>> points = cfg.qp_points;
  points.insert(points.end(), extra_x.begin(), extra_x.end());
  if (points.empty()) {
    std::cerr << "qp: no evaluation points (config key 'qp_points' empty and no --x)\n";
    return kExitValidation;
  }

  json report = json::array();
  bool all_converged = true;
  for (const auto& xv : points) {
    if (static_cast<int>(xv.size()) != field.dimension()) {
      std::cerr << "qp: point dimension mismatch with field\n";
      return kExitValidation;
    }
    Vec x(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) x[i] = xv[i];
    const ValueEstimate est = infinite_horizon_value(field, x, gamma, cfg.alpha, cfg.solver);
    json rec{{"x", xv},
             {"value", est.value},
             {"energy", est.energy},
             {"impulse_cost", est.impulse_cost},
             {"converged", est.converged},
             {"cap_active", est.cap_active},
             {"horizons", est.horizons},
             {"horizon_values", est.horizon_values}};
    json imps = json::array();
    for (const auto& item : est.impulses.items) {
      imps.push_back({{"time", item.time}, {"coord", item.coord}, {"target", item.target}});
    }
    rec["impulses"] = imps;
    if (field.separable()) {
      rec["oracle"] = gradient_case_oracle(field, x, gamma, cfg.alpha);
    }
    all_converged = all_converged && est.converged;

    // Optimizing trajectory: node states, the control on each step, and a
    // marker on nodes where a coordinate is reset.
    fs::create_directories(cfg.output_dir);
    auto traj = open_out(fs::path(cfg.output_dir) /
                         ("qp_traj_" + std::to_string(report.size()) + ".csv"));
    traj << "t";
    const int p = field.dimension();
    for (int i = 1; i <= p; ++i) traj << ",y" << i;
    for (int i = 1; i <= p; ++i) traj << ",u" << i;
    traj << ",impulse_coord\n";
    const double hstep = est.control.h;
    for (std::size_t k = 0; k < est.states.size(); ++k) {
      traj << fmt(k * hstep);
      for (int i = 0; i < p; ++i) traj << ',' << fmt(est.states[k][i]);
      for (int i = 0; i < p; ++i) {
        traj << ',' << (k < est.control.values.size() ? fmt(est.control.values[k][i]) : "0");
      }
      int mark = -1;
      for (const auto& item : est.impulses.items) {
        if (item.node == static_cast<int>(k)) mark = item.coord + 1;
      }
      traj << ',' << mark << '\n';
    }

    report.push_back(std::move(rec));
  }

  fs::create_directories(cfg.output_dir);
  auto out = open_out(fs::path(cfg.output_dir) / "qp_report.json");
  out << report.dump(2) << "\n";
  std::cout << report.dump(2) << "\n";
  return all_converged ? 0 : kExitSolver;
}

int cmd_verify(const ExperimentConfig& cfg) {
  const DriftField field = cfg.field.build();
  const AlphaStableParams alpha(cfg.alpha);
  const double gamma = cfg.scalar_gamma();
  if (cfg.targets.empty()) {
    std::cerr << "verify: config key 'targets' is empty\n";
    return kExitValidation;
  }
  fs::create_directories(cfg.output_dir);

  SlopeOptions opts;
  opts.T = cfg.T;
  opts.h = cfg.h;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;
  opts.solver = cfg.solver;

  bool all_ok = true;
  for (std::size_t ti = 0; ti < cfg.targets.size(); ++ti) {
    const TargetSet target = cfg.targets[ti].build();
    const EstimationReport rep =
        ldp_slope(field, gamma, alpha, target, cfg.n_grid, cfg.trials, opts);

    const std::string tag = "target" + std::to_string(ti);
    auto csv = open_out(fs::path(cfg.output_dir) / (tag + "_estimates.csv"));
    csv << "n,trials,hits,p_hat,ci_low,ci_high\n";
    for (const auto& r : rep.records) {
      csv << fmt(r.n) << ',' << r.trials << ',' << r.hits << ',' << fmt(r.p_hat) << ','
          << fmt(r.ci_low) << ',' << fmt(r.ci_high) << '\n';
    }

    json jrep{{"slope_valid", rep.slope_valid},
              {"slope", rep.slope},
              {"slope_stderr", rep.slope_stderr},
              {"warnings", rep.warnings}};
    if (rep.v_solver) jrep["V_solver"] = *rep.v_solver;
    if (rep.v_oracle) jrep["V_oracle"] = *rep.v_oracle;
    auto jout = open_out(fs::path(cfg.output_dir) / (tag + "_report.json"));
    jout << jrep.dump(2) << "\n";

    // Plot data: log n, log p_hat and the fitted line, for any plotting tool.
    auto plot = open_out(fs::path(cfg.output_dir) / (tag + "_plotdata.csv"));
    plot << "log_n,log_p_hat,fit\n";
    double xbar = 0, ybar = 0, w = 0;
    for (const auto& r : rep.records) {
      if (r.hits <= 0) continue;
      xbar += r.hits * std::log(r.n);
      ybar += r.hits * std::log(r.p_hat);
      w += r.hits;
    }
    if (w > 0) {
      xbar /= w;
      ybar /= w;
    }
    for (const auto& r : rep.records) {
      if (r.hits <= 0) continue;
      const double lx = std::log(r.n);
      plot << fmt(lx) << ',' << fmt(std::log(r.p_hat)) << ','
           << fmt(ybar + rep.slope * (lx - xbar)) << '\n';
    }

    std::cout << tag << ": slope=" << (rep.slope_valid ? fmt(rep.slope) : "n/a");
    if (rep.v_solver) std::cout << " V_solver=" << fmt(*rep.v_solver);
    if (rep.v_oracle) std::cout << " V_oracle=" << fmt(*rep.v_oracle);
    std::cout << "\n";
    all_ok = all_ok && rep.slope_valid;
  }
  return all_ok ? 0 : kExitSolver;
}

int cmd_selftest() {
  bool all = true;
  auto verdict = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    all = all && ok;
  };

  const SelfTestReport noise = noise_self_tests({1.2, 1.5, 1.8}, 1000000);
  for (const auto& v : noise.verdicts) {
    verdict(v.name, v.status != SelfTestVerdict::Status::Fail);
  }

  // Adjoint gradient vs central differences on random instances.
  {
    Mat A(2, 2);
    A << 1.0, 0.4, -0.2, 1.5;
    DriftField field = DriftField::linear_hurwitz(A);
    RngStream rng(99, 0);
    double worst = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
      TranscriptionSpec spec;
      spec.field = &field;
      spec.horizon = 1.0 + rng.uniform01();
      spec.grid_size = 30;
      Vec x0(2);
      x0 << 2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0;
      spec.initial_state = x0;
      spec.terminal = TranscriptionSpec::Terminal::PenaltyTarget;
      spec.target = Vec::Zero(2);
      spec.mu_terminal = 1.0 + 5.0 * rng.uniform01();
      if (inst % 2 == 0) spec.impulse_slots = {{7, 0}, {19, 1}};
      Vec d(spec.decision_size());
      for (int i = 0; i < d.size(); ++i) d[i] = 0.5 * (2.0 * rng.uniform01() - 1.0);
      Vec g;
      transcription_objective(spec, d, &g);
      // FD roundoff scales with the objective, so floor the denominator at the
      // gradient norm scale.
      const double f0 = transcription_objective(spec, d, nullptr);
      const double floor = 1e-7 * (1.0 + g.norm());
      const double eps = 1e-6 * std::cbrt(1.0 + std::abs(f0));
      for (int i = 0; i < d.size(); ++i) {
        Vec dp = d, dm = d;
        dp[i] += eps;
        dm[i] -= eps;
        const double fd = (transcription_objective(spec, dp, nullptr) -
                           transcription_objective(spec, dm, nullptr)) /
                          (2 * eps);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max({floor, std::abs(fd)}));
      }
    }
    verdict("adjoint gradient vs finite differences (rel err " + fmt(worst) + ")",
            worst <= 1e-4);
  }

  // Oracle agreement on a small OU grid.
  {
    DriftField ou = DriftField::separable_quadratic({1.0});
    double worst = 0.0;
    for (double gamma : {0.5, 5.0}) {
      for (double xv : {1.0, 2.0}) {
        const auto est = infinite_horizon_value(ou, Vec::Constant(1, xv), gamma, 1.5);
        const double oracle = gradient_case_oracle(ou, Vec::Constant(1, xv), gamma, 1.5);
        worst = std::max(worst, std::abs(est.value - oracle) / std::max(1e-9, oracle));
      }
    }
    verdict("quasipotential vs gradient-case oracle (rel err " + fmt(worst) + ")",
            worst <= 0.05);
  }

  std::cout << (all ? "selftest: all checks passed\n" : "selftest: FAILURES\n");
  return all ? 0 : kExitSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"small-noise Levy diffusion toolkit"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  long long sim_count = 1;
  bool no_noise = false;
  std::vector<std::string> x_args;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) {
      sub->add_option("--config", config_path, "experiment config JSON")->required();
    }
    sub->add_option("--seed", [&ov](const std::vector<std::string>& v) {
      ov.seed = std::stoull(v.front());
      return true;
    }, "override config seed");
    sub->add_option("--workers", [&ov](const std::vector<std::string>& v) {
      ov.workers = std::stoi(v.front());
      return true;
    }, "override config worker count");
    sub->add_option("--out", [&ov](const std::vector<std::string>& v) {
      ov.out = v.front();
      return true;
    }, "override output directory");
  };

  CLI::App* sim = app.add_subcommand("simulate", "sample SDE paths to CSV");
  add_common(sim, true);
  sim->add_option("--count", sim_count, "number of paths");
  sim->add_flag("--no-noise", no_noise, "disable both noise sources");

  CLI::App* qp = app.add_subcommand("qp", "evaluate the rate function V_gamma");
  add_common(qp, true);
  qp->add_option("--x", x_args, "evaluation point, comma-separated coordinates");

  CLI::App* verify = app.add_subcommand("verify", "Monte Carlo slope verification");
  add_common(verify, true);

  CLI::App* selftest = app.add_subcommand("selftest", "run numerical self tests");
  (void)selftest;

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("selftest")) return cmd_selftest();
    const ExperimentConfig cfg = load_with_overrides(config_path, ov);
    if (app.got_subcommand("simulate")) return cmd_simulate(cfg, sim_count, no_noise);
    if (app.got_subcommand("qp")) {
      std::vector<std::vector<double>> pts;
      for (const auto& s : x_args) {
        std::vector<double> xv;
        std::string tok;
        std::stringstream ss(s);
        while (std::getline(ss, tok, ',')) xv.push_back(std::stod(tok));
        pts.push_back(std::move(xv));
      }
      return cmd_qp(cfg, pts);
    }
    if (app.got_subcommand("verify")) return cmd_verify(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
