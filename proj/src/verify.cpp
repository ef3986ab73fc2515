#include "ldp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace ldp {

bool TargetSet::contains(const Vec& x) const {
  if (kind == Kind::Ball) return (x - center).norm() <= radius;
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  return true;
}

TargetSet TargetSet::ball(const Vec& center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("TargetSet::ball: radius must be > 0");
  TargetSet t;
  t.kind = Kind::Ball;
  t.center = center;
  t.radius = radius;
  return t;
}

TargetSet TargetSet::box(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size() || lo.size() < 1 || ((hi - lo).array() <= 0.0).any()) {
    throw std::invalid_argument("TargetSet::box: need lo < hi componentwise");
  }
  TargetSet t;
  t.kind = Kind::Box;
  t.lo = lo;
  t.hi = hi;
  return t;
}

std::pair<double, double> wilson_interval(long long hits, long long trials) {
  if (trials <= 0) throw std::invalid_argument("wilson_interval: trials must be > 0");
  const double z = 1.959963984540054;  // 95%
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // The endpoints are exact at 0 and n hits; avoid roundoff residue there.
  const double lo = hits == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = hits == trials ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

PerNRecord estimate_hit_probability(const DriftField& field, const NoiseScale& scale,
                                    const AlphaStableParams& alpha, double T, double h,
                                    const TargetSet& target, long long trials,
                                    std::uint64_t seed, int workers, const Vec* x0) {
  if (trials < 1000) {
    throw std::invalid_argument("estimate_hit_probability: need at least 10^3 trials");
  }
  if (workers < 1) throw std::invalid_argument("estimate_hit_probability: workers >= 1");
  const int p = field.dimension();
  const int n_steps = static_cast<int>(std::llround(T / h));
  if (n_steps < 1) throw std::invalid_argument("estimate_hit_probability: T < h");
  const Vec start = x0 ? *x0 : Vec::Zero(p);
  const double an = scale.a_n();
  const double bn = scale.b_n();
  const double sqrth = std::sqrt(h);
  const double stable_scale = std::pow(h, 1.0 / alpha.alpha);

  auto run_range = [&](long long lo, long long hi) -> long long {
    long long local_hits = 0;
    Vec x(p), drift(p);
    for (long long trial = lo; trial < hi; ++trial) {
      RngStream rng(seed, static_cast<std::uint64_t>(trial));
      x = start;
      for (int k = 0; k < n_steps; ++k) {
        drift = field.evaluate(x);
        for (int i = 0; i < p; ++i) {
          double dx = h * drift[i];
          if (an != 0.0) dx += an * sqrth * rng.normal();
          if (bn != 0.0) dx += bn * stable_scale * rng.stable(alpha.alpha);
          x[i] += dx;
        }
      }
      if (target.contains(x)) ++local_hits;
    }
    return local_hits;
  };

  std::vector<long long> partial(workers, 0);
  if (workers == 1) {
    partial[0] = run_range(0, trials);
  } else {
    std::vector<std::thread> pool;
    const long long chunk = trials / workers;
    for (int w = 0; w < workers; ++w) {
      const long long lo = w * chunk;
      const long long hi = (w + 1 == workers) ? trials : lo + chunk;
      pool.emplace_back([&, w, lo, hi] { partial[w] = run_range(lo, hi); });
    }
    for (auto& t : pool) t.join();
  }
  long long hits = 0;
  for (long long c : partial) hits += c;  // ordered reduction

  PerNRecord rec;
  rec.n = scale.n;
  rec.trials = trials;
  rec.hits = hits;
  rec.p_hat = static_cast<double>(hits) / static_cast<double>(trials);
  std::tie(rec.ci_low, rec.ci_high) = wilson_interval(hits, trials);
  return rec;
}

long long TrialsSchedule::trials_for(double n, std::size_t index) const {
  if (index < per_n.size()) return per_n[index];
  const double raw = base * std::pow(n, exponent);
  return std::clamp(static_cast<long long>(std::llround(raw)), min_trials, max_trials);
}

EstimationReport ldp_slope(const DriftField& field, double gamma,
                           const AlphaStableParams& alpha, const TargetSet& target,
                           const std::vector<double>& n_grid,
                           const TrialsSchedule& schedule, const SlopeOptions& opts) {
  if (n_grid.size() < 4) {
    throw std::invalid_argument("ldp_slope: need a geometric n-grid with >= 4 points");
  }
  EstimationReport report;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    NoiseScale scale(n_grid[i], gamma);
    const long long trials = schedule.trials_for(n_grid[i], i);
    report.records.push_back(estimate_hit_probability(field, scale, alpha, opts.T, opts.h,
                                                      target, trials, opts.seed,
                                                      opts.workers));
  }

  // Weighted least squares of log p_hat on log n; weight = hits, since
  // var(log p_hat) ~ (1 - p)/(trials p) ~ 1/hits for rare hits.
  std::vector<double> xs, ys, ws;
  for (const auto& rec : report.records) {
    if (rec.hits < opts.min_hits_per_point) {
      report.warnings.push_back("n=" + std::to_string(rec.n) + " dropped: only " +
                                std::to_string(rec.hits) + " hits");
      continue;
    }
    xs.push_back(std::log(rec.n));
    ys.push_back(std::log(rec.p_hat));
    ws.push_back(static_cast<double>(rec.hits));
  }
  if (xs.size() >= 3) {
    double sw = 0, swx = 0, swy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sw += ws[i];
      swx += ws[i] * xs[i];
      swy += ws[i] * ys[i];
    }
    const double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
      sxy += ws[i] * (xs[i] - xbar) * (ys[i] - ybar);
    }
    report.slope = sxy / sxx;
    report.slope_stderr = std::sqrt(1.0 / sxx);
    report.slope_valid = true;
  } else {
    report.warnings.push_back("fewer than 3 usable n-points: no slope fitted");
  }

  if (opts.attach_solver_value && target.kind == TargetSet::Kind::Ball) {
    const auto est =
        infinite_horizon_value(field, target.center, gamma, alpha.alpha, opts.solver);
    report.v_solver = est.value;
    if (field.separable()) {
      report.v_oracle = gradient_case_oracle(field, target.center, gamma, alpha.alpha);
    }
  }
  return report;
}

bool SelfTestReport::all_passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const SelfTestVerdict& v) {
    return v.status != SelfTestVerdict::Status::Fail;
  });
}

namespace {

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

}  // namespace

SelfTestReport noise_self_tests(const std::vector<double>& alpha_grid, long long samples,
                                std::uint64_t seed) {
  SelfTestReport report;
  const long long power_threshold = 100000;
  for (double a : alpha_grid) {
    const AlphaStableParams params(a);
    const std::string tag = "alpha=" + std::to_string(a);
    if (samples < power_threshold) {
      report.verdicts.push_back({tag + " (all checks)",
                                 SelfTestVerdict::Status::InsufficientPower,
                                 static_cast<double>(samples),
                                 static_cast<double>(power_threshold)});
      continue;
    }

    RngStream rng(seed, static_cast<std::uint64_t>(a * 1000));
    std::vector<double> s(static_cast<std::size_t>(samples));
    for (auto& v : s) v = rng.stable(a);

    // Characteristic function: mean cos(theta S) -> exp(-|theta|^alpha).
    for (double theta : {0.25, 0.5, 1.0, 2.0}) {
      double mc = 0.0, ms = 0.0;
      for (double v : s) {
        mc += std::cos(theta * v);
        ms += std::sin(theta * v);
      }
      mc /= static_cast<double>(samples);
      ms /= static_cast<double>(samples);
      const double expected = std::exp(-std::pow(theta, a));
      const double err = std::abs(mc - expected);
      report.verdicts.push_back({tag + " CF theta=" + std::to_string(theta),
                                 err <= 0.01 ? SelfTestVerdict::Status::Pass
                                             : SelfTestVerdict::Status::Fail,
                                 err, 0.01});
      report.verdicts.push_back({tag + " symmetry theta=" + std::to_string(theta),
                                 std::abs(ms) <= 0.01 ? SelfTestVerdict::Status::Pass
                                                      : SelfTestVerdict::Status::Fail,
                                 std::abs(ms), 0.01});
    }

    // Self-similarity: an increment over dt=4 (sum of four unit increments)
    // matches 4^{1/alpha} times an increment over dt=1.
    const std::size_t m = std::min<std::size_t>(100000, s.size());
    RngStream rng2(seed + 1, static_cast<std::uint64_t>(a * 1000));
    std::vector<double> big(m), scaled(m);
    const double scale4 = std::pow(4.0, 1.0 / a);
    for (std::size_t i = 0; i < m; ++i) {
      big[i] = rng2.stable(a) + rng2.stable(a) + rng2.stable(a) + rng2.stable(a);
    }
    for (std::size_t i = 0; i < m; ++i) scaled[i] = scale4 * s[i];
    const double d = ks_two_sample(big, scaled);
    const double crit =
        1.628 * std::sqrt(2.0 / static_cast<double>(m));  // 1% critical value
    report.verdicts.push_back({tag + " self-similarity KS",
                               d <= crit ? SelfTestVerdict::Status::Pass
                                         : SelfTestVerdict::Status::Fail,
                               d, crit});
  }
  return report;
}

}  // namespace ldp
