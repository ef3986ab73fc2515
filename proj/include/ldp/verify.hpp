#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldp/dynamics.hpp"
#include "ldp/quasipotential.hpp"

namespace ldp {

/// Compact target set for terminal-hit probabilities.
struct TargetSet {
  enum class Kind { Ball, Box };
  Kind kind = Kind::Ball;
  Vec center;
  double radius = 0.0;
  Vec lo, hi;

  bool contains(const Vec& x) const;

  static TargetSet ball(const Vec& center, double radius);
  static TargetSet box(const Vec& lo, const Vec& hi);
};

struct PerNRecord {
  double n = 0.0;
  long long trials = 0;
  long long hits = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct EstimationReport {
  std::vector<PerNRecord> records;
  bool slope_valid = false;
  double slope = 0.0;
  double slope_stderr = 0.0;
  std::optional<double> v_solver;
  std::optional<double> v_oracle;
  std::vector<std::string> warnings;
};

/// Wilson 95% score interval for a binomial proportion.
std::pair<double, double> wilson_interval(long long hits, long long trials);

/// Fraction of independent Euler-Maruyama paths with X(T) in the target,
/// started from x0 (the origin by default). Each trial owns its RngStream
/// (stream id = trial index), so the result does not depend on the worker
/// split.
PerNRecord estimate_hit_probability(const DriftField& field, const NoiseScale& scale,
                                    const AlphaStableParams& alpha, double T, double h,
                                    const TargetSet& target, long long trials,
                                    std::uint64_t seed, int workers,
                                    const Vec* x0 = nullptr);

struct TrialsSchedule {
  /// trials(n) = clamp(round(base * n^exponent), min_trials, max_trials).
  double base = 100.0;
  double exponent = 1.0;
  long long min_trials = 2000;
  long long max_trials = 5'000'000;
  /// Explicit per-n counts override the rule when non-empty.
  std::vector<long long> per_n;

  long long trials_for(double n, std::size_t index) const;
};

struct SlopeOptions {
  double T = 6.0;
  double h = 0.01;
  std::uint64_t seed = 1;
  int workers = 1;
  long long min_hits_per_point = 10;
  bool attach_solver_value = true;
  SolverParams solver;
};

/// Weighted least-squares fit of log p_hat against log n over the n-grid;
/// the negated slope estimates inf over the target of V_gamma. Points with
/// too few hits are dropped with a warning; fewer than 3 surviving points
/// invalidates the slope.
EstimationReport ldp_slope(const DriftField& field, double gamma,
                           const AlphaStableParams& alpha, const TargetSet& target,
                           const std::vector<double>& n_grid,
                           const TrialsSchedule& schedule, const SlopeOptions& opts);

struct SelfTestVerdict {
  std::string name;
  enum class Status { Pass, Fail, InsufficientPower } status;
  double statistic = 0.0;
  double bound = 0.0;
};

struct SelfTestReport {
  std::vector<SelfTestVerdict> verdicts;
  bool all_passed() const;
};

/// Characteristic-function, symmetry and self-similarity checks of the stable
/// sampler for each alpha in the grid. Sample sizes below the power threshold
/// yield InsufficientPower, not failure.
SelfTestReport noise_self_tests(const std::vector<double>& alpha_grid,
                                long long samples, std::uint64_t seed = 7);

}  // namespace ldp
