#pragma once

#include <optional>
#include <vector>

#include "ldp/dynamics.hpp"

namespace ldp {

/// One impulse: at time `time`, coordinate `coord` is replaced by `target`.
/// Cost depends only on the count, never on the size.
struct Impulse {
  double time = 0.0;
  int coord = 0;
  double target = 0.0;
};

struct ImpulseSchedule {
  std::vector<Impulse> impulses;
  double horizon = 0.0;
  /// Per-coordinate penalty weights gamma_i; empty means scalar-gamma mode.
  std::vector<double> weights;
};

/// Piecewise-constant control on a uniform grid; value k applies on
/// [k h, (k+1) h).
struct ContinuousControl {
  double h = 0.0;
  std::vector<Vec> values;

  double horizon() const { return h * static_cast<double>(values.size()); }
};

/// Rate of the initial condition X(0): either a point mass at 0
/// (0 at the origin, infinite elsewhere) or a positive definite quadratic.
struct InitialRate {
  enum class Kind { PointMass, Quadratic };
  Kind kind = Kind::PointMass;
  Mat Q;

  double operator()(const Vec& z) const;

  static InitialRate point_mass() { return InitialRate{}; }
  static InitialRate quadratic(const Mat& Q);
};

struct RateBreakdown {
  double energy = 0.0;        // (1/2) int ||u||^2
  double impulse_cost = 0.0;  // gamma * I_L(v), or the weighted sum
  double initial_cost = 0.0;  // initial rate at z
  double total = 0.0;
  bool finite = true;
};

/// Kinetic energy (1/2) int_0^T ||u||^2 dt; exact for piecewise-constant u.
double energy_IW(const ContinuousControl& u);

/// I_L(v) = alpha * (number of one-coordinate jumps), infinite for
/// inadmissible schedules (two jumps at the same instant). In scalar mode the
/// caller multiplies by gamma; if the schedule carries weights, the returned
/// value is the fully weighted cost sum_i gamma_i alpha d_i.
double jump_count_IL(const ImpulseSchedule& v, double alpha, int dimension);

RateBreakdown total_rate(const Vec& z, const ContinuousControl& u, const ImpulseSchedule& v,
                         double gamma, double alpha, const InitialRate& initial);

struct JumpCounts {
  std::vector<long> up;    // d_+ per coordinate
  std::vector<long> down;  // d_- per coordinate

  long total() const;
};

/// Count recorded stable increments with b_n |dL| > delta, signed by
/// direction. Operates on the driving-noise record, not the state path.
JumpCounts detect_jumps(const SdePath& path, double delta);

/// Default detection threshold: five typical small-increment scales.
double default_jump_threshold(const NoiseScale& scale, const AlphaStableParams& alpha,
                              double h);

}  // namespace ldp
