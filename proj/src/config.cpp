#include "ldp/config.hpp"

#include <fstream>

namespace ldp {

using nlohmann::json;

namespace {

Mat to_matrix(const std::vector<std::vector<double>>& rows, const std::string& key) {
  if (rows.empty()) throw ConfigError("config key '" + key + "' must be a non-empty matrix");
  const std::size_t cols = rows.front().size();
  Mat m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw ConfigError("config key '" + key + "' has ragged rows");
    }
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

Vec to_vec(const std::vector<double>& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

template <typename T>
T get_required(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing config key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

DriftField FieldSpec::build() const {
  if (family == "linear_hurwitz") {
    return DriftField::linear_hurwitz(to_matrix(matrix, "field.matrix"));
  }
  if (family == "separable_quadratic") {
    if (curvatures.empty()) throw ConfigError("config key 'field.curvatures' is required");
    return DriftField::separable_quadratic(curvatures);
  }
  if (family == "separable_saturated_quartic") {
    if (kappas.empty()) throw ConfigError("config key 'field.kappas' is required");
    return DriftField::separable_saturated_quartic(kappas, box_halfwidth);
  }
  if (family == "custom_polynomial") {
    if (coeffs.empty()) throw ConfigError("config key 'field.coeffs' is required");
    if (!(lipschitz > 0.0)) throw ConfigError("config key 'field.lipschitz' must be > 0");
    return DriftField::custom_polynomial(coeffs, lipschitz);
  }
  throw ConfigError("config key 'field.family' has unknown value '" + family + "'");
}

TargetSet TargetSpec::build() const {
  if (kind == "ball") return TargetSet::ball(to_vec(center), radius);
  if (kind == "box") return TargetSet::box(to_vec(lo), to_vec(hi));
  throw ConfigError("config key 'targets[].kind' has unknown value '" + kind + "'");
}

InitialRate InitialSpec::build() const {
  if (kind == "point_mass") return InitialRate::point_mass();
  if (kind == "quadratic") return InitialRate::quadratic(to_matrix(Q, "initial.Q"));
  throw ConfigError("config key 'initial.kind' has unknown value '" + kind + "'");
}

double ExperimentConfig::scalar_gamma() const {
  if (gamma.size() != 1) {
    throw ConfigError("config key 'gamma' must be scalar for this command");
  }
  return gamma.front();
}

void ExperimentConfig::validate() const {
  const DriftField f = field.build();  // throws on malformed field spec
  if (!(alpha > 1.0 && alpha < 2.0)) {
    throw ConfigError("config key 'alpha' must lie in (1, 2)");
  }
  if (gamma.empty()) throw ConfigError("config key 'gamma' must be non-empty");
  if (gamma.size() != 1 && static_cast<int>(gamma.size()) != f.dimension()) {
    throw ConfigError("config key 'gamma' must be scalar or match the field dimension");
  }
  for (double g : gamma) {
    if (!(g > 0.0)) throw ConfigError("config key 'gamma' entries must be > 0");
  }
  for (double n : n_grid) {
    if (!(n >= 2.0)) throw ConfigError("config key 'n_grid' entries must be >= 2");
  }
  if (!(h > 0.0)) throw ConfigError("config key 'h' must be > 0");
  if (!(T >= h)) throw ConfigError("config key 'T' must be >= h");
  if (workers < 1) throw ConfigError("config key 'workers' must be >= 1");
  initial.build();
  for (const auto& t : targets) {
    const TargetSet ts = t.build();
    const int tdim = ts.kind == TargetSet::Kind::Ball ? static_cast<int>(ts.center.size())
                                                      : static_cast<int>(ts.lo.size());
    if (tdim != f.dimension()) {
      throw ConfigError("config key 'targets' dimension mismatch with 'field'");
    }
  }
  for (const auto& x : qp_points) {
    if (static_cast<int>(x.size()) != f.dimension()) {
      throw ConfigError("config key 'qp_points' dimension mismatch with 'field'");
    }
  }
}

json to_json(const ExperimentConfig& cfg) {
  json jf{{"family", cfg.field.family}, {"lipschitz", cfg.field.lipschitz}};
  if (!cfg.field.matrix.empty()) jf["matrix"] = cfg.field.matrix;
  if (!cfg.field.curvatures.empty()) jf["curvatures"] = cfg.field.curvatures;
  if (!cfg.field.kappas.empty()) {
    jf["kappas"] = cfg.field.kappas;
    jf["box_halfwidth"] = cfg.field.box_halfwidth;
  }
  if (!cfg.field.coeffs.empty()) jf["coeffs"] = cfg.field.coeffs;

  json ji{{"kind", cfg.initial.kind}};
  if (!cfg.initial.Q.empty()) ji["Q"] = cfg.initial.Q;

  json jt = json::array();
  for (const auto& t : cfg.targets) {
    json e{{"kind", t.kind}};
    if (t.kind == "ball") {
      e["center"] = t.center;
      e["radius"] = t.radius;
    } else {
      e["lo"] = t.lo;
      e["hi"] = t.hi;
    }
    jt.push_back(e);
  }

  json jtr{{"base", cfg.trials.base},
           {"exponent", cfg.trials.exponent},
           {"min_trials", cfg.trials.min_trials},
           {"max_trials", cfg.trials.max_trials}};
  if (!cfg.trials.per_n.empty()) jtr["per_n"] = cfg.trials.per_n;

  json js{{"grad_tol", cfg.solver.grad_tol},
          {"max_iterations", cfg.solver.max_iterations},
          {"endpoint_tol", cfg.solver.endpoint_tol},
          {"ladder_tol", cfg.solver.ladder_tol},
          {"cap_tol", cfg.solver.cap_tol},
          {"base_horizon", cfg.solver.base_horizon},
          {"control_step", cfg.solver.control_step},
          {"max_ladder", cfg.solver.max_ladder},
          {"coarse_slots", cfg.solver.coarse_slots}};

  return json{{"field", jf},
              {"alpha", cfg.alpha},
              {"gamma", cfg.gamma},
              {"initial", ji},
              {"n_grid", cfg.n_grid},
              {"T", cfg.T},
              {"h", cfg.h},
              {"targets", jt},
              {"trials", jtr},
              {"seed", cfg.seed},
              {"workers", cfg.workers},
              {"output_dir", cfg.output_dir},
              {"solver", js},
              {"qp_points", cfg.qp_points}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  const json jf = get_required<json>(j, "field");
  cfg.field.family = get_required<std::string>(jf, "family");
  cfg.field.matrix = get_or(jf, "matrix", cfg.field.matrix);
  cfg.field.curvatures = get_or(jf, "curvatures", cfg.field.curvatures);
  cfg.field.kappas = get_or(jf, "kappas", cfg.field.kappas);
  cfg.field.box_halfwidth = get_or(jf, "box_halfwidth", cfg.field.box_halfwidth);
  cfg.field.coeffs = get_or(jf, "coeffs", cfg.field.coeffs);
  cfg.field.lipschitz = get_or(jf, "lipschitz", cfg.field.lipschitz);

  cfg.alpha = get_required<double>(j, "alpha");
  if (j.contains("gamma") && j.at("gamma").is_number()) {
    cfg.gamma = {j.at("gamma").get<double>()};
  } else {
    cfg.gamma = get_required<std::vector<double>>(j, "gamma");
  }
  if (j.contains("initial")) {
    const json ji = j.at("initial");
    cfg.initial.kind = get_or<std::string>(ji, "kind", "point_mass");
    cfg.initial.Q = get_or(ji, "Q", cfg.initial.Q);
  }
  cfg.n_grid = get_or(j, "n_grid", cfg.n_grid);
  cfg.T = get_or(j, "T", cfg.T);
  cfg.h = get_or(j, "h", cfg.h);
  if (j.contains("targets")) {
    for (const auto& e : j.at("targets")) {
      TargetSpec t;
      t.kind = get_required<std::string>(e, "kind");
      t.center = get_or(e, "center", t.center);
      t.radius = get_or(e, "radius", t.radius);
      t.lo = get_or(e, "lo", t.lo);
      t.hi = get_or(e, "hi", t.hi);
      cfg.targets.push_back(std::move(t));
    }
  }
  if (j.contains("trials")) {
    const json jt = j.at("trials");
    cfg.trials.base = get_or(jt, "base", cfg.trials.base);
    cfg.trials.exponent = get_or(jt, "exponent", cfg.trials.exponent);
    cfg.trials.min_trials = get_or(jt, "min_trials", cfg.trials.min_trials);
    cfg.trials.max_trials = get_or(jt, "max_trials", cfg.trials.max_trials);
    cfg.trials.per_n = get_or(jt, "per_n", cfg.trials.per_n);
  }
  cfg.seed = get_or(j, "seed", cfg.seed);
  cfg.workers = get_or(j, "workers", cfg.workers);
  cfg.output_dir = get_or<std::string>(j, "output_dir", cfg.output_dir);
  if (j.contains("solver")) {
    const json js = j.at("solver");
    cfg.solver.grad_tol = get_or(js, "grad_tol", cfg.solver.grad_tol);
    cfg.solver.max_iterations = get_or(js, "max_iterations", cfg.solver.max_iterations);
    cfg.solver.endpoint_tol = get_or(js, "endpoint_tol", cfg.solver.endpoint_tol);
    cfg.solver.ladder_tol = get_or(js, "ladder_tol", cfg.solver.ladder_tol);
    cfg.solver.cap_tol = get_or(js, "cap_tol", cfg.solver.cap_tol);
    cfg.solver.base_horizon = get_or(js, "base_horizon", cfg.solver.base_horizon);
    cfg.solver.control_step = get_or(js, "control_step", cfg.solver.control_step);
    cfg.solver.max_ladder = get_or(js, "max_ladder", cfg.solver.max_ladder);
    cfg.solver.coarse_slots = get_or(js, "coarse_slots", cfg.solver.coarse_slots);
  }
  cfg.qp_points = get_or(j, "qp_points", cfg.qp_points);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ldp
