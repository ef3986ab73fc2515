#include "ldp/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace ldp {

namespace {

int steps_for(double T, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step h must be > 0");
  if (!(T >= h)) throw std::invalid_argument("horizon T must be >= h");
  return static_cast<int>(std::llround(T / h));
}

void check_finite(const Vec& y, double t, const char* what) {
  if (!y.allFinite()) {
    throw std::runtime_error(std::string(what) + ": non-finite state at t=" +
                             std::to_string(t) + " (overflow)");
  }
}

FlowPath integrate(const DriftField& field, const Vec& x, double T, double h,
                   Integrator rule, double sign) {
  const int n = steps_for(T, h);
  FlowPath path;
  path.h = h;
  path.rule = rule;
  path.times.reserve(n + 1);
  path.states.reserve(n + 1);
  Vec y = x;
  path.times.push_back(0.0);
  path.states.push_back(y);
  auto f = [&](const Vec& z) -> Vec { return sign * field.evaluate(z); };
  for (int k = 0; k < n; ++k) {
    if (rule == Integrator::Euler) {
      y = y + h * f(y);
    } else {
      const Vec k1 = f(y);
      const Vec k2 = f(y + 0.5 * h * k1);
      const Vec k3 = f(y + 0.5 * h * k2);
      const Vec k4 = f(y + h * k3);
      y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double t = (k + 1) * h;
    check_finite(y, t, "flow");
    path.times.push_back(t);
    path.states.push_back(y);
  }
  return path;
}

}  // namespace

const std::vector<Potential1D>& DriftField::potentials() const {
  if (potentials_.empty()) {
    throw std::logic_error("DriftField: potentials() requires a separable-gradient field");
  }
  return potentials_;
}

DriftField DriftField::linear_hurwitz(const Mat& A) {
  if (A.rows() != A.cols() || A.rows() < 1) {
    throw std::invalid_argument("linear_hurwitz: A must be square");
  }
  DriftField f;
  f.dim_ = static_cast<int>(A.rows());
  f.family_ = FieldFamily::LinearHurwitz;
  f.lipschitz_ = A.operatorNorm();
  Mat Acopy = A;
  f.eval_ = [Acopy](const Vec& x) -> Vec { return -Acopy * x; };
  f.jac_ = [Acopy](const Vec&) -> Mat { return -Acopy; };
  return f;
}

DriftField DriftField::separable_quadratic(const std::vector<double>& curvatures) {
  const int p = static_cast<int>(curvatures.size());
  if (p < 1) throw std::invalid_argument("separable_quadratic: empty curvature list");
  double lip = 0.0;
  for (double c : curvatures) {
    if (!(c > 0.0)) throw std::invalid_argument("separable_quadratic: curvatures must be > 0");
    lip = std::max(lip, c);
  }
  DriftField f;
  f.dim_ = p;
  f.family_ = FieldFamily::SeparableGradient;
  f.lipschitz_ = lip;
  auto cs = curvatures;
  f.eval_ = [cs, p](const Vec& x) -> Vec {
    Vec b(p);
    for (int i = 0; i < p; ++i) b[i] = -cs[i] * x[i];
    return b;
  };
  f.jac_ = [cs, p](const Vec&) -> Mat {
    Mat J = Mat::Zero(p, p);
    for (int i = 0; i < p; ++i) J(i, i) = -cs[i];
    return J;
  };
  for (int i = 0; i < p; ++i) {
    const double c = cs[i];
    f.potentials_.push_back(Potential1D{
        [c](double x) { return 0.5 * c * x * x; },
        [c](double x) { return c * x; },
        [c](double) { return c; },
    });
  }
  return f;
}

DriftField DriftField::separable_saturated_quartic(const std::vector<double>& kappas,
                                                   double s) {
  const int p = static_cast<int>(kappas.size());
  if (p < 1) throw std::invalid_argument("separable_saturated_quartic: empty kappa list");
  if (!(s > 0.0)) throw std::invalid_argument("separable_saturated_quartic: box must be > 0");
  double lip = 0.0;
  for (double k : kappas) {
    if (!(k > 0.0)) throw std::invalid_argument("separable_saturated_quartic: kappas must be > 0");
    lip = std::max(lip, 3.0 * k * s * s);
  }
  DriftField f;
  f.dim_ = p;
  f.family_ = FieldFamily::SeparableGradient;
  f.lipschitz_ = lip;
  auto ks = kappas;
  auto slope1 = [s](double kappa, double x) -> double {
    if (std::abs(x) <= s) return kappa * x * x * x;
    const double sg = x > 0 ? 1.0 : -1.0;
    return sg * (kappa * s * s * s + 3.0 * kappa * s * s * (std::abs(x) - s));
  };
  auto curv1 = [s](double kappa, double x) -> double {
    return std::abs(x) <= s ? 3.0 * kappa * x * x : 3.0 * kappa * s * s;
  };
  auto val1 = [s](double kappa, double x) -> double {
    const double ax = std::abs(x);
    if (ax <= s) return 0.25 * kappa * x * x * x * x;
    const double d = ax - s;
    return 0.25 * kappa * s * s * s * s + kappa * s * s * s * d + 1.5 * kappa * s * s * d * d;
  };
  f.eval_ = [ks, p, slope1](const Vec& x) -> Vec {
    Vec b(p);
    for (int i = 0; i < p; ++i) b[i] = -slope1(ks[i], x[i]);
    return b;
  };
  f.jac_ = [ks, p, curv1](const Vec& x) -> Mat {
    Mat J = Mat::Zero(p, p);
    for (int i = 0; i < p; ++i) J(i, i) = -curv1(ks[i], x[i]);
    return J;
  };
  for (int i = 0; i < p; ++i) {
    const double k = ks[i];
    f.potentials_.push_back(Potential1D{
        [k, val1](double x) { return val1(k, x); },
        [k, slope1](double x) { return slope1(k, x); },
        [k, curv1](double x) { return curv1(k, x); },
    });
  }
  return f;
}

DriftField DriftField::custom_polynomial(const std::vector<std::vector<double>>& coeffs,
                                         double lipschitz_bound) {
  const int p = static_cast<int>(coeffs.size());
  if (p < 1) throw std::invalid_argument("custom_polynomial: empty coefficient list");
  if (!(lipschitz_bound > 0.0)) {
    throw std::invalid_argument("custom_polynomial: Lipschitz bound must be > 0");
  }
  DriftField f;
  f.dim_ = p;
  f.family_ = FieldFamily::Custom;
  f.lipschitz_ = lipschitz_bound;
  auto cs = coeffs;
  auto poly = [](const std::vector<double>& c, double x) -> double {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
  };
  auto dpoly = [](const std::vector<double>& c, double x) -> double {
    double v = 0.0;
    for (std::size_t j = c.size(); j-- > 1;) v = v * x + static_cast<double>(j) * c[j];
    return v;
  };
  f.eval_ = [cs, p, poly](const Vec& x) -> Vec {
    Vec b(p);
    for (int i = 0; i < p; ++i) b[i] = poly(cs[i], x[i]);
    return b;
  };
  f.jac_ = [cs, p, dpoly](const Vec& x) -> Mat {
    Mat J = Mat::Zero(p, p);
    for (int i = 0; i < p; ++i) J(i, i) = dpoly(cs[i], x[i]);
    return J;
  };
  return f;
}

FlowPath flow(const DriftField& field, const Vec& x, double T, double h, Integrator rule) {
  return integrate(field, x, T, h, rule, +1.0);
}

FlowPath reversed_flow(const DriftField& field, const Vec& x, double T, double h,
                       Integrator rule) {
  return integrate(field, x, T, h, rule, -1.0);
}

SdePath simulate_sde(const DriftField& field, const Vec& x0, const NoiseScale& scale,
                     const AlphaStableParams& alpha, double T, double h, RngStream& rng) {
  const int n = steps_for(T, h);
  const int p = field.dimension();
  const double an = scale.a_n();
  const double bn = scale.b_n();
  SdePath path;
  path.h = h;
  path.scale = scale;
  path.times.reserve(n + 1);
  path.states.reserve(n + 1);
  path.gaussian_increments.reserve(n);
  path.stable_increments.reserve(n);
  Vec x = x0;
  path.times.push_back(0.0);
  path.states.push_back(x);
  const double sqrth = std::sqrt(h);
  const double stable_scale = std::pow(h, 1.0 / alpha.alpha);
  for (int k = 0; k < n; ++k) {
    Vec dw(p), dl(p);
    for (int i = 0; i < p; ++i) dw[i] = sqrth * rng.normal();
    for (int i = 0; i < p; ++i) dl[i] = stable_scale * rng.stable(alpha.alpha);
    x = x + h * field.evaluate(x) + an * dw + bn * dl;
    const double t = (k + 1) * h;
    check_finite(x, t, "simulate_sde");
    path.times.push_back(t);
    path.states.push_back(x);
    path.gaussian_increments.push_back(std::move(dw));
    path.stable_increments.push_back(std::move(dl));
  }
  return path;
}

bool replay_check(const SdePath& path, const DriftField& field) {
  const double an = path.scale.a_n();
  const double bn = path.scale.b_n();
  for (std::size_t k = 0; k + 1 < path.states.size(); ++k) {
    const Vec expected = path.states[k] + path.h * field.evaluate(path.states[k]) +
                         an * path.gaussian_increments[k] + bn * path.stable_increments[k];
    if (expected != path.states[k + 1]) return false;
  }
  return true;
}

AssumptionReport validate_assumptions(const DriftField& field, double box_radius,
                                      int samples, std::uint64_t seed) {
  if (!(box_radius > 0.0)) throw std::invalid_argument("validate_assumptions: R must be > 0");
  if (samples < 1000) throw std::invalid_argument("validate_assumptions: need m >= 1000");
  const int p = field.dimension();
  AssumptionReport rep;
  rep.box_radius = box_radius;
  rep.samples = samples;

  const Vec zero = Vec::Zero(p);
  rep.b0_norm = field.evaluate(zero).norm();
  rep.equilibrium_ok = rep.b0_norm <= 1e-12;
  if (!rep.equilibrium_ok) rep.notes.push_back("b(0) != 0: no equilibrium at the origin");

  RngStream rng(seed, 0);
  auto random_point = [&]() -> Vec {
    Vec x(p);
    for (int i = 0; i < p; ++i) x[i] = box_radius * (2.0 * rng.uniform01() - 1.0);
    return x;
  };

  double lip = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vec x = random_point();
    const Vec y = random_point();
    const double d = (x - y).norm();
    if (d < 1e-12) continue;
    lip = std::max(lip, (field.evaluate(x) - field.evaluate(y)).norm() / d);
  }
  rep.lipschitz_estimate = lip;
  rep.lipschitz_ok = lip <= field.lipschitz_bound() * (1.0 + 1e-6);
  if (!rep.lipschitz_ok) {
    rep.notes.push_back("empirical Lipschitz constant exceeds the declared bound");
  }

  const Mat J = field.jacobian(zero);
  Eigen::EigenSolver<Mat> es(J);
  rep.spectrum_ok = true;
  for (int i = 0; i < p; ++i) {
    const std::complex<double> ev = es.eigenvalues()[i];
    rep.spectrum_at_origin.push_back(ev);
    if (ev.real() >= 0.0) rep.spectrum_ok = false;
  }
  if (!rep.spectrum_ok) {
    rep.notes.push_back("Jacobian at 0 has an eigenvalue with nonnegative real part");
  }

  // Flow-decay probe: ||phi(T_probe, x)|| < ||x|| / 2 from sampled starts.
  // T_probe is sized from the slowest linear rate seen at the origin.
  double slowest = 1.0;
  for (const auto& ev : rep.spectrum_at_origin) {
    if (ev.real() < 0.0) slowest = std::min(slowest, -ev.real());
  }
  const double t_probe = std::max(2.0, 2.0 / slowest);
  const int n_probe = 32;
  int passed = 0;
  for (int k = 0; k < n_probe; ++k) {
    Vec x = random_point();
    if (x.norm() < 1e-6) x[0] = 0.5 * box_radius;
    try {
      const FlowPath fp = flow(field, x, t_probe, 1e-2);
      if (fp.terminal().norm() < 0.5 * x.norm()) ++passed;
    } catch (const std::runtime_error&) {
      // overflow counts as a failed probe
    }
  }
  rep.decay_pass_fraction = static_cast<double>(passed) / n_probe;
  rep.decay_ok = passed == n_probe;
  if (!rep.decay_ok) {
    rep.notes.push_back("flow-decay probe failed from some starts (possible extra equilibria)");
  }

  rep.all_ok = rep.equilibrium_ok && rep.lipschitz_ok && rep.spectrum_ok && rep.decay_ok;
  return rep;
}

}  // namespace ldp
