#pragma once

#include <string>
#include <vector>

#include "json.hpp"  // vendored nlohmann/json

#include "ldp/dynamics.hpp"
#include "ldp/rates.hpp"
#include "ldp/verify.hpp"

namespace ldp {

/// Thrown on malformed configuration; message names the offending key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FieldSpec {
  std::string family;  // linear_hurwitz | separable_quadratic |
                       // separable_saturated_quartic | custom_polynomial
  std::vector<std::vector<double>> matrix;  // linear_hurwitz
  std::vector<double> curvatures;           // separable_quadratic
  std::vector<double> kappas;               // saturated quartic
  double box_halfwidth = 1.0;
  std::vector<std::vector<double>> coeffs;  // custom polynomial
  double lipschitz = 0.0;

  DriftField build() const;
};

struct TargetSpec {
  std::string kind;  // ball | box
  std::vector<double> center;
  double radius = 0.0;
  std::vector<double> lo, hi;

  TargetSet build() const;
};

struct InitialSpec {
  std::string kind = "point_mass";  // point_mass | quadratic
  std::vector<std::vector<double>> Q;

  InitialRate build() const;
};

struct ExperimentConfig {
  FieldSpec field;
  double alpha = 1.5;
  std::vector<double> gamma;  // size 1 = scalar mode, size p = per-coordinate
  InitialSpec initial;
  std::vector<double> n_grid = {16, 64, 256, 1024, 4096};
  double T = 6.0;
  double h = 0.01;
  std::vector<TargetSpec> targets;
  TrialsSchedule trials;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string output_dir = "out";
  SolverParams solver;
  std::vector<std::vector<double>> qp_points;  // evaluation points for `qp`

  double scalar_gamma() const;
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace ldp
