#pragma once

#include <vector>

#include "ldp/dynamics.hpp"
#include "ldp/rates.hpp"

namespace ldp {

struct SolverParams {
  double grad_tol = 1e-6;
  int max_iterations = 500;
  int lbfgs_memory = 10;

  double endpoint_tol = 1e-3;  // terminal residual after continuation
  double ladder_tol = 1e-3;    // horizon-doubling stop criterion
  double cap_tol = 5e-3;       // slack on the p*gamma*alpha bound
  double tie_tol = 1e-3;       // band in which the impulse-free plan wins

  double mu0 = 1e2;
  double mu_growth = 10.0;
  int max_continuation = 6;

  double base_horizon = 4.0;  // first rung of the horizon ladder
  double control_step = 0.02; // transcription grid step
  int max_ladder = 4;         // horizons T0, 2 T0, ..., T0 2^{max_ladder-1}
  int coarse_slots = 20;      // impulse nodes every N/coarse_slots grid nodes
  int max_impulses = -1;      // -1 means the state dimension p
};

/// Minimum-energy steering under the reversed dynamics dy/dt = -b(y) + u,
/// from `start` at t=0 to `end` at t=T.
struct ConnectionProblem {
  const DriftField* field = nullptr;
  Vec start;
  Vec end;
  double horizon = 1.0;
  int grid_size = 200;
  double endpoint_tol = 1e-3;
};

struct TranscriptionSolution {
  ContinuousControl control;
  std::vector<Vec> states;
  double energy = 0.0;
  double endpoint_error = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
};

/// Impulses actually executed by an optimizer, resolved to grid nodes.
struct ImpulsePlan {
  struct Item {
    int node = 0;
    double time = 0.0;
    int coord = 0;
    double target = 0.0;
  };
  std::vector<Item> items;
};

struct ValueEstimate {
  double value = 0.0;
  Vec x;
  double energy = 0.0;
  double impulse_cost = 0.0;
  double initial_cost = 0.0;
  ContinuousControl control;
  ImpulsePlan impulses;
  std::vector<Vec> states;
  bool converged = false;
  bool cap_active = false;
  std::vector<double> horizons;        // ladder actually evaluated
  std::vector<double> horizon_values;  // value at each rung
};

/// Discretized control problem handed to the first-order solver. Decision
/// vector layout: controls u_0..u_{N-1} (flattened, p entries each), then one
/// target per impulse slot, then the initial state when free_initial is set.
struct TranscriptionSpec {
  const DriftField* field = nullptr;
  double horizon = 1.0;
  int grid_size = 200;
  Vec initial_state;
  bool free_initial = false;

  struct Slot {
    int node = 0;
    int coord = 0;
  };
  std::vector<Slot> impulse_slots;  // strictly increasing nodes

  enum class Terminal { None, PenaltyTarget, Quadratic };
  Terminal terminal = Terminal::PenaltyTarget;
  Vec target;
  Mat terminal_Q;
  double mu_terminal = 0.0;

  bool annulus = false;
  double r_inner = 0.0;
  double r_outer = 0.0;
  double mu_annulus = 0.0;

  double h() const { return horizon / grid_size; }
  int decision_size() const;
};

/// Objective of the transcription (running energy + penalties) with the exact
/// discrete-adjoint gradient. Exposed so the gradient can be checked against
/// finite differences.
double transcription_objective(const TranscriptionSpec& spec, const Vec& decision,
                               Vec* gradient);

/// Forward rollout of the spec under a decision vector; returns node states
/// (post-reset at impulse nodes).
std::vector<Vec> transcription_rollout(const TranscriptionSpec& spec, const Vec& decision);

TranscriptionSolution connection_cost(const ConnectionProblem& prob,
                                      const SolverParams& params = {});

/// V_{gamma,T}(x): optimal initial cost + energy + gamma * I_L over reversed
/// trajectories from x, with the outer search over impulse count, coordinates,
/// coarse-grid times, and jointly optimized targets.
ValueEstimate finite_horizon_value(const DriftField& field, const Vec& x, double T,
                                   double gamma, double alpha, const InitialRate& initial,
                                   const SolverParams& params = {},
                                   const ValueEstimate* warm_hint = nullptr);

/// V_gamma(x): horizon-doubling ladder over finite_horizon_value with the
/// point-mass terminal, capped at p * gamma * alpha.
ValueEstimate infinite_horizon_value(const DriftField& field, const Vec& x, double gamma,
                                     double alpha, const SolverParams& params = {});

/// Closed form for separable gradient fields with convex U_i:
/// sum_i min(2 U_i(x_i), gamma * alpha).
double gradient_case_oracle(const DriftField& field, const Vec& x, double gamma,
                            double alpha);

/// Minimal energy of reversed trajectories confined to r1 <= ||y|| <= r2 over
/// [0, T], free endpoints. Grows linearly in T for valid fields.
double annulus_energy_growth(const DriftField& field, double r1, double r2, double T,
                             const SolverParams& params = {});

}  // namespace ldp
