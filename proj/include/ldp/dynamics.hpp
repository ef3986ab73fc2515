#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "ldp/noise.hpp"

namespace ldp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class FieldFamily { LinearHurwitz, SeparableGradient, Custom };

/// One-dimensional potential U with U(0) = 0; the drift contribution of
/// coordinate i is b_i(x) = -U_i'(x_i).
struct Potential1D {
  std::function<double(double)> value;
  std::function<double(double)> slope;      // U'
  std::function<double(double)> curvature;  // U''
};

/// Drift b: R^p -> R^p with b(0) = 0 and a declared global Lipschitz bound.
class DriftField {
 public:
  int dimension() const { return dim_; }
  Vec evaluate(const Vec& x) const { return eval_(x); }
  Mat jacobian(const Vec& x) const { return jac_(x); }
  double lipschitz_bound() const { return lipschitz_; }
  FieldFamily family() const { return family_; }

  bool separable() const { return !potentials_.empty(); }
  /// Valid only for separable-gradient fields.
  const std::vector<Potential1D>& potentials() const;

  /// b(x) = -A x with A Hurwitz (eigenvalues of -A in the left half plane).
  static DriftField linear_hurwitz(const Mat& A);
  /// b_i(x) = -c_i x_i, i.e. U_i = c_i x_i^2 / 2 with c_i > 0.
  static DriftField separable_quadratic(const std::vector<double>& curvatures);
  /// U_i' = kappa_i x^3 inside [-s, s], continued linearly with slope
  /// 3 kappa_i s^2 outside, which keeps b globally Lipschitz.
  static DriftField separable_saturated_quartic(const std::vector<double>& kappas,
                                                double box_halfwidth);
  /// b_i(x_i) = sum_j coeffs[i][j] x_i^j, with a caller-declared Lipschitz
  /// bound; Assumption checks run via validate_assumptions.
  static DriftField custom_polynomial(const std::vector<std::vector<double>>& coeffs,
                                      double lipschitz_bound);

 private:
  int dim_ = 0;
  FieldFamily family_ = FieldFamily::Custom;
  double lipschitz_ = 0.0;
  std::function<Vec(const Vec&)> eval_;
  std::function<Mat(const Vec&)> jac_;
  std::vector<Potential1D> potentials_;
};

enum class Integrator { RK4, Euler };

/// Deterministic trajectory on a uniform grid.
struct FlowPath {
  double h = 0.0;
  std::vector<double> times;
  std::vector<Vec> states;
  Integrator rule = Integrator::RK4;

  const Vec& terminal() const { return states.back(); }
};

/// Euler-Maruyama trajectory with the driving increments recorded, so the
/// recursion X_{k+1} = X_k + b(X_k) h + a_n dW_k + b_n dL_k replays exactly.
struct SdePath {
  double h = 0.0;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> gaussian_increments;  // dW_k, one per step
  std::vector<Vec> stable_increments;    // dL_k, one per step
  NoiseScale scale = NoiseScale::noiseless();

  const Vec& terminal() const { return states.back(); }
};

/// Integrate dy/dt = b(y) from x over [0, T] with step h.
FlowPath flow(const DriftField& field, const Vec& x, double T, double h,
              Integrator rule = Integrator::RK4);

/// Integrate dy/dt = -b(y); trajectories leave the equilibrium.
FlowPath reversed_flow(const DriftField& field, const Vec& x, double T, double h,
                       Integrator rule = Integrator::RK4);

SdePath simulate_sde(const DriftField& field, const Vec& x0, const NoiseScale& scale,
                     const AlphaStableParams& alpha, double T, double h, RngStream& rng);

/// Bit-exact check of the Euler-Maruyama recursion against the recorded
/// increments.
bool replay_check(const SdePath& path, const DriftField& field);

struct AssumptionReport {
  double b0_norm = 0.0;
  bool equilibrium_ok = false;
  double lipschitz_estimate = 0.0;
  bool lipschitz_ok = false;
  std::vector<std::complex<double>> spectrum_at_origin;
  bool spectrum_ok = false;
  double decay_pass_fraction = 0.0;
  bool decay_ok = false;
  double box_radius = 0.0;
  int samples = 0;
  bool all_ok = false;
  std::vector<std::string> notes;
};

/// Probe-based check of the standing assumptions on b inside the box of
/// radius R: equilibrium at 0, empirical Lipschitz constant over m sampled
/// pairs, Jacobian spectrum at 0, and a flow-decay probe. Failures are
/// reported, never thrown. Coverage is limited to the box; the report records
/// R and m rather than claiming a global certificate.
AssumptionReport validate_assumptions(const DriftField& field, double box_radius,
                                      int samples, std::uint64_t seed = 20240817);

}  // namespace ldp
