#include "ldp/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ldp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double InitialRate::operator()(const Vec& z) const {
  if (kind == Kind::PointMass) {
    return z.norm() <= 1e-12 ? 0.0 : kInf;
  }
  return z.dot(Q * z);
}

InitialRate InitialRate::quadratic(const Mat& Q) {
  if (Q.rows() != Q.cols() || Q.rows() < 1) {
    throw std::invalid_argument("InitialRate::quadratic: Q must be square");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Q + Q.transpose()));
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("InitialRate::quadratic: Q must be positive definite");
  }
  InitialRate r;
  r.kind = Kind::Quadratic;
  r.Q = Q;
  return r;
}

double energy_IW(const ContinuousControl& u) {
  if (!(u.h > 0.0)) throw std::invalid_argument("energy_IW: grid step must be > 0");
  double s = 0.0;
  for (const auto& uk : u.values) {
    if (!uk.allFinite()) throw std::invalid_argument("energy_IW: non-finite control value");
    s += uk.squaredNorm();
  }
  return 0.5 * s * u.h;
}

double jump_count_IL(const ImpulseSchedule& v, double alpha, int dimension) {
  if (!v.weights.empty()) {
    if (static_cast<int>(v.weights.size()) != dimension) {
      throw std::invalid_argument("jump_count_IL: weight vector size must equal dimension");
    }
    for (double w : v.weights) {
      if (!(w > 0.0)) throw std::invalid_argument("jump_count_IL: weights must be > 0");
    }
  }
  std::vector<Impulse> sorted = v.impulses;
  std::sort(sorted.begin(), sorted.end(),
            [](const Impulse& a, const Impulse& b) { return a.time < b.time; });
  double cost = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Impulse& imp = sorted[i];
    if (imp.coord < 0 || imp.coord >= dimension) {
      throw std::invalid_argument("jump_count_IL: coordinate index out of range");
    }
    if (imp.time < 0.0 || imp.time > v.horizon) {
      throw std::invalid_argument("jump_count_IL: impulse time outside [0, T]");
    }
    // Two jumps at one instant would need >= 2 coordinates to move at once,
    // which the admissibility rule forbids.
    if (i > 0 && sorted[i].time == sorted[i - 1].time) return kInf;
    cost += v.weights.empty() ? alpha : v.weights[imp.coord] * alpha;
  }
  return cost;
}

RateBreakdown total_rate(const Vec& z, const ContinuousControl& u, const ImpulseSchedule& v,
                         double gamma, double alpha, const InitialRate& initial) {
  RateBreakdown out;
  out.energy = energy_IW(u);
  const double il = jump_count_IL(v, alpha, static_cast<int>(z.size()));
  out.impulse_cost = v.weights.empty() ? gamma * il : il;
  out.initial_cost = initial(z);
  out.total = out.energy + out.impulse_cost + out.initial_cost;
  out.finite = std::isfinite(out.total);
  return out;
}

long JumpCounts::total() const {
  long t = 0;
  for (std::size_t i = 0; i < up.size(); ++i) t += up[i] + down[i];
  return t;
}

JumpCounts detect_jumps(const SdePath& path, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("detect_jumps: delta must be > 0");
  if (path.stable_increments.size() + 1 != path.states.size()) {
    throw std::invalid_argument("detect_jumps: path carries no stable-noise record");
  }
  const int p = static_cast<int>(path.states.front().size());
  JumpCounts counts;
  counts.up.assign(p, 0);
  counts.down.assign(p, 0);
  const double bn = path.scale.b_n();
  for (const auto& dl : path.stable_increments) {
    for (int i = 0; i < p; ++i) {
      const double jump = bn * dl[i];
      if (jump > delta) ++counts.up[i];
      if (jump < -delta) ++counts.down[i];
    }
  }
  return counts;
}

double default_jump_threshold(const NoiseScale& scale, const AlphaStableParams& alpha,
                              double h) {
  return 5.0 * scale.b_n() * std::pow(h, 1.0 / alpha.alpha);
}

}  // namespace ldp
