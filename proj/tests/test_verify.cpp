#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ldp/verify.hpp"

using namespace ldp;

namespace {
DriftField ou1d() { return DriftField::separable_quadratic({1.0}); }
}  // namespace

TEST_CASE("target membership") {
  const auto ball = TargetSet::ball(Vec::Constant(1, 1.0), 0.1);
  CHECK(ball.contains(Vec::Constant(1, 1.05)));
  CHECK_FALSE(ball.contains(Vec::Constant(1, 1.11)));
  CHECK_FALSE(ball.contains(Vec::Constant(1, -1.0)));

  Vec lo(2), hi(2);
  lo << -1.0, 0.0;
  hi << 1.0, 2.0;
  const auto box = TargetSet::box(lo, hi);
  Vec in(2), out(2);
  in << 0.0, 1.0;
  out << 0.0, 2.5;
  CHECK(box.contains(in));
  CHECK_FALSE(box.contains(out));

  CHECK_THROWS_AS(TargetSet::ball(Vec::Zero(1), 0.0), std::invalid_argument);
}

TEST_CASE("Wilson interval reference values") {
  auto mid = wilson_interval(50, 100);
  CHECK(mid.first == doctest::Approx(0.403831530366).epsilon(1e-9));
  CHECK(mid.second == doctest::Approx(0.596168469634).epsilon(1e-9));
  auto zero = wilson_interval(0, 100);
  CHECK(zero.first == 0.0);
  CHECK(zero.second == doctest::Approx(0.036993498207).epsilon(1e-9));
  auto full = wilson_interval(100, 100);
  CHECK(full.first == doctest::Approx(0.963006501793).epsilon(1e-9));
  CHECK(full.second == 1.0);
}

TEST_CASE("Wilson coverage on a known Bernoulli") {
  // 200 replications of Binomial(400, 0.3): the 95% interval should cover
  // p = 0.3 in at least ~90% of them.
  RngStream rng(88, 0);
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    long long hits = 0;
    for (int i = 0; i < 400; ++i) hits += (rng.uniform01() < 0.3);
    const auto ci = wilson_interval(hits, 400);
    covered += (ci.first <= 0.3 && 0.3 <= ci.second);
  }
  CHECK(covered >= 180);
}

TEST_CASE("the whole space is hit with certainty") {
  const auto rec = estimate_hit_probability(ou1d(), NoiseScale(64.0, 1.0),
                                            AlphaStableParams(1.5), 1.0, 0.01,
                                            TargetSet::ball(Vec::Zero(1), 100.0), 2000, 5, 1);
  CHECK(rec.p_hat == 1.0);
  CHECK(rec.hits == 2000);
}

TEST_CASE("nested targets give nested estimates under shared seeds") {
  NoiseScale scale(16.0, 0.5);
  AlphaStableParams alpha(1.5);
  const auto small = estimate_hit_probability(ou1d(), scale, alpha, 2.0, 0.01,
                                              TargetSet::ball(Vec::Zero(1), 0.2), 4000, 9, 1);
  const auto big = estimate_hit_probability(ou1d(), scale, alpha, 2.0, 0.01,
                                            TargetSet::ball(Vec::Zero(1), 0.6), 4000, 9, 1);
  CHECK(small.hits <= big.hits);
  CHECK(big.p_hat > 0.5);  // a 0.6-ball around 0 catches most of the mass here
}

TEST_CASE("worker split does not change the estimate") {
  NoiseScale scale(64.0, 1.0);
  AlphaStableParams alpha(1.5);
  const auto target = TargetSet::ball(Vec::Zero(1), 0.3);
  const auto one = estimate_hit_probability(ou1d(), scale, alpha, 1.0, 0.01, target, 5000, 3, 1);
  const auto three =
      estimate_hit_probability(ou1d(), scale, alpha, 1.0, 0.01, target, 5000, 3, 3);
  CHECK(one.hits == three.hits);
  CHECK(one.p_hat == three.p_hat);
}

TEST_CASE("a three sigma ball captures nearly everything") {
  // Stationary std of the noisy OU is a_n / sqrt(2); radius 3 a_n is over
  // four sigma, and the stable part is tiny at gamma = 2.
  NoiseScale scale(64.0, 2.0);
  const double r = 3.0 * scale.a_n();
  const auto rec = estimate_hit_probability(ou1d(), scale, AlphaStableParams(1.5), 6.0, 0.01,
                                            TargetSet::ball(Vec::Zero(1), r), 5000, 21, 1);
  CHECK(rec.p_hat >= 0.99);
}

TEST_CASE("trials schedule") {
  TrialsSchedule s;
  s.base = 100.0;
  s.exponent = 1.0;
  s.min_trials = 2000;
  s.max_trials = 50000;
  CHECK(s.trials_for(16.0, 0) == 2000);
  CHECK(s.trials_for(256.0, 1) == 25600);
  CHECK(s.trials_for(4096.0, 2) == 50000);
  s.per_n = {11, 22};
  CHECK(s.trials_for(16.0, 0) == 11);
  CHECK(s.trials_for(256.0, 1) == 22);
}

TEST_CASE("slope fit on the OU continuous regime") {
  TrialsSchedule sched;
  sched.base = 10.0;
  sched.exponent = 1.0;
  sched.min_trials = 20000;
  sched.max_trials = 60000;
  SlopeOptions opts;
  opts.seed = 12;
  opts.T = 6.0;
  opts.attach_solver_value = true;
  const auto rep = ldp_slope(ou1d(), 5.0, AlphaStableParams(1.5),
                             TargetSet::ball(Vec::Constant(1, 1.0), 0.25),
                             {16, 64, 256, 1024}, sched, opts);
  CHECK(rep.slope_valid);
  // The inner edge of the ball sits at 0.75, so the expected decay exponent
  // lies between 0.56 and 1; finite-size flattening lands it near -0.6.
  CHECK(rep.slope < -0.4);
  CHECK(rep.slope > -1.0);
  REQUIRE(rep.v_solver.has_value());
  REQUIRE(rep.v_oracle.has_value());
  CHECK(*rep.v_solver == doctest::Approx(1.0).epsilon(0.05));
  CHECK(*rep.v_oracle == doctest::Approx(1.0).epsilon(1e-9));

  // Identical seeds reproduce the report exactly.
  const auto rep2 = ldp_slope(ou1d(), 5.0, AlphaStableParams(1.5),
                              TargetSet::ball(Vec::Constant(1, 1.0), 0.25),
                              {16, 64, 256, 1024}, sched, opts);
  CHECK(rep2.slope == rep.slope);
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    CHECK(rep2.records[i].hits == rep.records[i].hits);
  }
}

TEST_CASE("low-hit points are dropped and can invalidate the fit") {
  TrialsSchedule sched;
  sched.per_n = {1000, 1000, 1000, 1000};
  SlopeOptions opts;
  opts.seed = 4;
  opts.attach_solver_value = false;
  // A far-out ball that virtually never gets hit at 200 trials.
  const auto rep = ldp_slope(ou1d(), 5.0, AlphaStableParams(1.5),
                             TargetSet::ball(Vec::Constant(1, 3.0), 0.1), {16, 64, 256, 1024},
                             sched, opts);
  CHECK_FALSE(rep.slope_valid);
  CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("validation of estimator inputs") {
  CHECK_THROWS_AS(estimate_hit_probability(ou1d(), NoiseScale(64.0, 1.0),
                                           AlphaStableParams(1.5), 1.0, 0.01,
                                           TargetSet::ball(Vec::Zero(1), 1.0), 500, 1, 1),
                  std::invalid_argument);  // too few trials
}

TEST_CASE("noise self tests flag insufficient power") {
  const auto rep = noise_self_tests({1.5}, 5000);
  bool saw_insufficient = false;
  for (const auto& v : rep.verdicts) {
    saw_insufficient |= (v.status == SelfTestVerdict::Status::InsufficientPower);
    CHECK(v.status != SelfTestVerdict::Status::Fail);
  }
  CHECK(saw_insufficient);
}

TEST_CASE("noise self tests pass at full power") {
  const auto rep = noise_self_tests({1.3}, 200000);
  CHECK(rep.all_passed());
}
