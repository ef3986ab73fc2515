// End-to-end acceptance gate: one line per criterion, nonzero exit on any
// failure. Tolerances are pinned here on purpose; loosen them only with a
// matching analysis of why the old band was wrong.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <vector>

#include "ldp/quasipotential.hpp"
#include "ldp/verify.hpp"

using namespace ldp;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, bool ok, const char* fmt, ...) {
  std::printf("%s criterion %2d: ", ok ? "PASS" : "FAIL", criterion);
  va_list args;
  va_start(args, fmt);
  std::vprintf(fmt, args);
  va_end(args);
  std::printf("\n");
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

}  // namespace

int main() {
  const auto t_start = clk::now();
  DriftField ou = DriftField::separable_quadratic({1.0});

  // 1 & 11a: continuous-regime oracle on x = 0.25, 0.5, ..., 3 at gamma = 5,
  // alpha = 1.5, plus ladder convergence bookkeeping.
  std::vector<ValueEstimate> grid1;
  {
    const auto t0 = clk::now();
    double worst = 0.0;
    for (int k = 1; k <= 12; ++k) {
      const double xv = 0.25 * k;
      auto est = infinite_horizon_value(ou, Vec::Constant(1, xv), 5.0, 1.5);
      const double oracle = std::min(xv * xv, 5.0 * 1.5);
      worst = std::max(worst, std::abs(est.value - oracle) / oracle);
      grid1.push_back(std::move(est));
    }
    const double elapsed = seconds_since(t0);
    report(1, worst <= 0.05 && elapsed < 300.0,
           "V_5 vs min(x^2, 7.5): worst rel err %.4f (tol 0.05), %.1fs", worst, elapsed);
  }

  // 2 & 11b: impulse regime at gamma = 0.5.
  ValueEstimate imp2;
  {
    imp2 = infinite_horizon_value(ou, Vec::Constant(1, 2.0), 0.5, 1.5);
    const double rel = std::abs(imp2.value - 0.75) / 0.75;
    report(2, rel <= 0.05 && imp2.impulses.items.size() == 1,
           "V_0.5(2) = %.4f (expect 0.75, tol 5%%), impulses = %zu", imp2.value,
           imp2.impulses.items.size());
  }

  // 3: LQ steering against the controllability-Gramian value.
  {
    ConnectionProblem prob;
    prob.field = &ou;
    prob.start = Vec::Constant(1, 1.0);
    prob.end = Vec::Zero(1);
    prob.horizon = 1.0;
    prob.grid_size = 400;
    const auto sol = connection_cost(prob);
    const double exact = 1.0 / (1.0 - std::exp(-2.0));
    const double rel = std::abs(sol.energy - exact) / exact;
    report(3, sol.converged && rel <= 0.01,
           "LQ connection energy %.6f vs %.6f, rel err %.5f (tol 0.01)", sol.energy, exact,
           rel);
  }

  // 4 & 5: cap bound on a 20-point grid (including 2D fields), and no gain
  // from p + 2 impulse slots anywhere on that grid.
  {
    DriftField f2 = DriftField::separable_quadratic({1.0, 2.0});
    Mat A(2, 2);
    A << 1.0, 0.5, -0.3, 2.0;
    DriftField fh = DriftField::linear_hurwitz(A);

    struct Case {
      const DriftField* field;
      Vec x;
      double gamma, alpha;
    };
    std::vector<Case> cases;
    for (double gamma : {0.4, 2.0}) {
      for (double alpha : {1.2, 1.8}) {
        for (double xv : {0.5, 4.0}) {
          cases.push_back({&ou, Vec::Constant(1, xv), gamma, alpha});
          Vec x2(2);
          x2 << xv, -xv;
          cases.push_back({&f2, x2, gamma, alpha});
        }
      }
    }
    Vec xh(2);
    xh << 3.0, -2.0;
    cases.push_back({&fh, xh, 0.3, 1.2});
    cases.push_back({&fh, xh, 2.0, 1.8});
    cases.push_back({&fh, 0.5 * xh, 0.8, 1.5});
    cases.push_back({&fh, -xh, 1.2, 1.4});

    double worst_excess = -1e9;
    double worst_gain = -1e9;
    for (const auto& c : cases) {
      const double cap = c.field->dimension() * c.gamma * c.alpha;
      const auto est = infinite_horizon_value(*c.field, c.x, c.gamma, c.alpha);
      worst_excess = std::max(worst_excess, est.value - cap);
      SolverParams generous;
      generous.max_impulses = c.field->dimension() + 2;
      const auto more = infinite_horizon_value(*c.field, c.x, c.gamma, c.alpha, generous);
      worst_gain = std::max(worst_gain, est.value - more.value);
    }
    report(4, worst_excess <= 5e-3,
           "cap V <= p*gamma*alpha on %zu points: worst excess %.2e (tol 5e-3)",
           cases.size(), worst_excess);
    report(5, worst_gain <= 1e-3,
           "p+2 impulse slots: best improvement %.2e (tol 1e-3)", worst_gain);
  }

  // 6: Monte Carlo slope, continuous regime. The target ball's inner edge at
  // 0.9 sets decay exponent 0.81; over n = 16..4096 the slowly varying
  // prefactor steepens the fitted slope to about -0.84, so the band upper
  // edge sits at -0.78 rather than at the -0.85 a center-of-ball heuristic
  // would suggest.
  long long budget_used = 0;
  {
    const auto t0 = clk::now();
    TrialsSchedule sched;
    sched.base = 100.0;
    sched.exponent = 1.0;
    sched.min_trials = 50000;
    sched.max_trials = 2000000;
    SlopeOptions opts;
    opts.seed = 20240824;
    opts.T = 6.0;
    opts.h = 0.01;
    const auto rep = ldp_slope(ou, 5.0, AlphaStableParams(1.5),
                               TargetSet::ball(Vec::Constant(1, 1.0), 0.1),
                               {16, 64, 256, 1024, 4096}, sched, opts);
    for (const auto& r : rep.records) budget_used += r.trials;
    report(6, rep.slope_valid && rep.slope >= -1.15 && rep.slope <= -0.78,
           "continuous-regime slope %.4f +- %.4f (band [-1.15, -0.78]), %.0fs",
           rep.slope, rep.slope_stderr, seconds_since(t0));
  }

  // 7: Monte Carlo slope, impulse regime (single-jump route dominates).
  {
    const auto t0 = clk::now();
    TrialsSchedule sched;
    sched.base = 200.0;
    sched.exponent = 1.0;
    sched.min_trials = 100000;
    sched.max_trials = 2000000;
    SlopeOptions opts;
    opts.seed = 20240824;
    opts.T = 6.0;
    opts.h = 0.01;
    const auto rep = ldp_slope(ou, 0.5, AlphaStableParams(1.5),
                               TargetSet::ball(Vec::Constant(1, 2.0), 0.15),
                               {16, 64, 256, 1024, 4096}, sched, opts);
    for (const auto& r : rep.records) budget_used += r.trials;
    const bool in_budget = budget_used <= 10000000;
    report(7, rep.slope_valid && rep.slope >= -0.90 && rep.slope <= -0.60 && in_budget,
           "impulse-regime slope %.4f +- %.4f (band [-0.90, -0.60]), %lld paths total, %.0fs",
           rep.slope, rep.slope_stderr, budget_used, seconds_since(t0));
  }

  // 8: stable sampler statistics.
  {
    const auto rep = noise_self_tests({1.2, 1.5, 1.8}, 1000000);
    bool ok = true;
    for (const auto& v : rep.verdicts) ok = ok && (v.status == SelfTestVerdict::Status::Pass);
    report(8, ok, "sampler CF error <= 0.01 at 1e6 samples and KS at 1%% for alpha in "
                  "{1.2, 1.5, 1.8} (%zu checks)",
           rep.verdicts.size());
  }

  // 9: adjoint gradient against central finite differences.
  {
    Mat A(2, 2);
    A << 1.0, 0.5, -0.3, 2.0;
    DriftField fields[2] = {DriftField::linear_hurwitz(A),
                            DriftField::separable_saturated_quartic({0.8, 1.2}, 1.5)};
    RngStream rng(271828, 0);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
      TranscriptionSpec spec;
      spec.field = &fields[inst % 2];
      spec.horizon = 0.5 + rng.uniform01();
      spec.grid_size = 25;
      Vec x0(2);
      x0 << 2.0 * rng.uniform01() - 1.0, 2.0 * rng.uniform01() - 1.0;
      spec.initial_state = x0;
      spec.target = Vec::Zero(2);
      spec.mu_terminal = 0.5 + 4.0 * rng.uniform01();
      if (inst % 3 == 0) spec.impulse_slots = {{6, inst % 2}, {17, (inst + 1) % 2}};
      if (inst % 4 == 0) {
        spec.annulus = true;
        spec.r_inner = 0.1;
        spec.r_outer = 2.0;
        spec.mu_annulus = 1.5;
      }
      if (inst % 5 == 0) spec.free_initial = true;
      Vec d(spec.decision_size());
      for (int i = 0; i < d.size(); ++i) d[i] = 0.6 * (2.0 * rng.uniform01() - 1.0);
      Vec g;
      transcription_objective(spec, d, &g);
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
    report(9, worst <= 1e-4, "adjoint vs FD on 50 instances: worst rel err %.2e (tol 1e-4)",
           worst);
  }

  // 10: confined energy doubles (at least 1.8x) with the horizon.
  {
    const double v2 = annulus_energy_growth(ou, 0.5, 1.0, 2.0);
    const double v4 = annulus_energy_growth(ou, 0.5, 1.0, 4.0);
    const double v8 = annulus_energy_growth(ou, 0.5, 1.0, 8.0);
    report(10, v4 >= 1.8 * v2 && v8 >= 1.8 * v4,
           "annulus energy %.4f / %.4f / %.4f at T = 2/4/8 (growth >= 1.8x)", v2, v4, v8);
  }

  // 11: ladder convergence on every grid point of criteria 1-2.
  {
    bool ok = true;
    double worst = 0.0;
    auto check_ladder = [&](const ValueEstimate& est) {
      if (est.horizon_values.size() < 2) {
        ok = false;
        return;
      }
      const std::size_t last = est.horizon_values.size() - 1;
      const double diff =
          std::abs(est.horizon_values[last] - est.horizon_values[last - 1]);
      worst = std::max(worst, diff);
      ok = ok && diff <= 1e-3;
    };
    for (const auto& est : grid1) check_ladder(est);
    check_ladder(imp2);
    report(11, ok, "|V_{2T} - V_T| at the final rung: worst %.2e (tol 1e-3)", worst);
  }

  std::printf("%s: %d criterion failure(s), %.0fs total\n", failures == 0 ? "OK" : "FAILED",
              failures, seconds_since(t_start));
  return failures == 0 ? 0 : 1;
}
