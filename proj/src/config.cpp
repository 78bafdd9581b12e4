#include "unravel/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace unravel {

namespace {

using nlohmann::json;

const json& require_field(const json& j, const char* key, const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError("config: missing field '" + ctx + key + "'");
  }
  return *it;
}

double get_number(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_field(j, key, ctx);
  if (!v.is_number()) {
    throw ConfigError("config: field '" + ctx + key + "' must be a number");
  }
  return v.get<double>();
}

double get_number_or(const json& j, const char* key, const std::string& ctx,
                     double fallback) {
  if (!j.contains(key)) return fallback;
  return get_number(j, key, ctx);
}

int get_int(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_field(j, key, ctx);
  if (!v.is_number_integer()) {
    throw ConfigError("config: field '" + ctx + key + "' must be an integer");
  }
  return v.get<int>();
}

int get_int_or(const json& j, const char* key, const std::string& ctx,
               int fallback) {
  if (!j.contains(key)) return fallback;
  return get_int(j, key, ctx);
}

std::string get_string(const json& j, const char* key, const std::string& ctx) {
  const json& v = require_field(j, key, ctx);
  if (!v.is_string()) {
    throw ConfigError("config: field '" + ctx + key + "' must be a string");
  }
  return v.get<std::string>();
}

cplx parse_entry(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError("config: " + ctx + " entries must be [re, im] pairs");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

CMatrix parse_matrix(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError("config: " + ctx + " must be a nonempty array of rows");
  }
  const int rows = static_cast<int>(j.size());
  if (!j[0].is_array() || j[0].empty()) {
    throw ConfigError("config: " + ctx + " rows must be nonempty arrays");
  }
  const int cols = static_cast<int>(j[0].size());
  CMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols) {
      throw ConfigError("config: " + ctx + " row " + std::to_string(r) +
                        " has inconsistent length");
    }
    for (int c = 0; c < cols; ++c) {
      m(r, c) = parse_entry(j[r][c], ctx);
    }
  }
  return m;
}

ModelSpec parse_model(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("config: field 'model' must be an object");
  }
  ModelSpec spec;
  spec.name = get_string(j, "name", "model.");
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (!params.is_object()) {
    throw ConfigError("config: field 'model.params' must be an object");
  }
  const std::string ctx = "model.params.";
  if (spec.name == "decay2d") {
    spec.decay.lambda0 = get_number_or(params, "lambda0", ctx, spec.decay.lambda0);
    spec.decay.nu = get_number_or(params, "nu", ctx, spec.decay.nu);
  } else if (spec.name == "cavity_qed") {
    spec.cavity.nu = get_number_or(params, "nu", ctx, spec.cavity.nu);
    spec.cavity.kappa = get_number_or(params, "kappa", ctx, spec.cavity.kappa);
    spec.cavity.mu1 = get_number_or(params, "mu1", ctx, spec.cavity.mu1);
    spec.cavity.mu2 = get_number_or(params, "mu2", ctx, spec.cavity.mu2);
    spec.cavity.mu3 = get_number_or(params, "mu3", ctx, spec.cavity.mu3);
    spec.cavity.fock_dim = get_int_or(params, "fock_dim", ctx, spec.cavity.fock_dim);
  } else if (spec.name == "custom") {
    spec.hamiltonian =
        parse_matrix(require_field(params, "hamiltonian", ctx), "model.params.hamiltonian");
    const json& ops = require_field(params, "lindblad_ops", ctx);
    if (!ops.is_array()) {
      throw ConfigError("config: field 'model.params.lindblad_ops' must be an array");
    }
    for (size_t k = 0; k < ops.size(); ++k) {
      spec.lindblad_ops.push_back(
          parse_matrix(ops[k], "model.params.lindblad_ops[" + std::to_string(k) + "]"));
    }
  } else {
    throw ConfigError("config: unknown model '" + spec.name +
                      "' (expected decay2d, cavity_qed, or custom)");
  }
  return spec;
}

std::vector<SchemeSpec> parse_schemes(const json& j) {
  if (!j.is_array()) {
    throw ConfigError("config: field 'schemes' must be an array");
  }
  if (j.empty()) {
    throw ConfigError("config: field 'schemes' must not be empty");
  }
  static const std::set<std::string> known = {
      "lqsd", "rqsd", "cqsd", "do_qsd", "multi_do_qsd", "qjp", "do_qjp"};
  std::vector<SchemeSpec> specs;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = "schemes[" + std::to_string(i) + "].";
    if (!j[i].is_object()) {
      throw ConfigError("config: schemes entries must be objects");
    }
    SchemeSpec s;
    s.name = get_string(j[i], "name", ctx);
    if (!known.count(s.name)) {
      throw ConfigError("config: unknown scheme '" + s.name + "' in '" + ctx + "name'");
    }
    if (s.name == "do_qjp") {
      s.rate_cap = get_number(j[i], "rate_cap", ctx);
      if (!(s.rate_cap > 0.0)) {
        throw ConfigError("config: field '" + ctx + "rate_cap' must be positive");
      }
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

std::vector<ObservableSpec> parse_observables(const json& j) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError("config: field 'observables' must be a nonempty array");
  }
  static const std::set<std::string> known = {"sigma_x", "sigma_y", "sigma_z",
                                              "number", "custom"};
  std::vector<ObservableSpec> specs;
  std::set<std::string> labels;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = "observables[" + std::to_string(i) + "].";
    if (!j[i].is_object()) {
      throw ConfigError("config: observables entries must be objects");
    }
    ObservableSpec s;
    s.name = get_string(j[i], "name", ctx);
    if (!known.count(s.name)) {
      throw ConfigError("config: unknown observable '" + s.name + "' in '" + ctx +
                        "name'");
    }
    s.label = j[i].contains("label") ? get_string(j[i], "label", ctx) : s.name;
    if (s.label.empty()) {
      throw ConfigError("config: field '" + ctx + "label' must not be empty");
    }
    if (!labels.insert(s.label).second) {
      throw ConfigError("config: duplicate observable label '" + s.label +
                        "'; set distinct labels");
    }
    if (s.name == "custom") {
      s.matrix = parse_matrix(require_field(j[i], "matrix", ctx),
                              "observables[" + std::to_string(i) + "].matrix");
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

InitialStateSpec parse_initial_state(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("config: field 'initial_state' must be an object");
  }
  InitialStateSpec s;
  if (j.contains("amplitudes")) {
    s.name = "amplitudes";
    const json& amps = j.at("amplitudes");
    if (!amps.is_array() || amps.empty()) {
      throw ConfigError("config: field 'initial_state.amplitudes' must be a "
                        "nonempty array of [re, im] pairs");
    }
    for (size_t i = 0; i < amps.size(); ++i) {
      s.amplitudes.push_back(parse_entry(amps[i], "initial_state.amplitudes"));
    }
    return s;
  }
  s.name = get_string(j, "name", "initial_state.");
  static const std::set<std::string> known = {"zero", "one", "plus", "plus_vacuum"};
  if (!known.count(s.name)) {
    throw ConfigError("config: unknown initial state '" + s.name +
                      "' (expected zero, one, plus, plus_vacuum, or amplitudes)");
  }
  return s;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config: document must be a JSON object");
  }
  const int schema = get_int(j, "schema", "");
  if (schema != 1) {
    throw ConfigError("config: unsupported schema " + std::to_string(schema) +
                      " (expected 1)");
  }
  ExperimentConfig cfg;
  cfg.model = parse_model(require_field(j, "model", ""));
  cfg.schemes = parse_schemes(require_field(j, "schemes", ""));
  cfg.observables = parse_observables(require_field(j, "observables", ""));
  cfg.initial_state = parse_initial_state(require_field(j, "initial_state", ""));
  cfg.dt = get_number(j, "dt", "");
  cfg.t_final = get_number(j, "t_final", "");
  cfg.n_samples = get_int(j, "n_samples", "");
  cfg.n_repeats = get_int_or(j, "n_repeats", "", 1);
  if (j.contains("seed")) {
    const json& v = j.at("seed");
    if (!v.is_number_integer() ||
        (!v.is_number_unsigned() && v.get<int64_t>() < 0)) {
      throw ConfigError("config: field 'seed' must be a nonnegative integer");
    }
    cfg.seed = v.get<uint64_t>();
  }
  if (j.contains("output_dir")) {
    cfg.output_dir = get_string(j, "output_dir", "");
  }
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) {
    throw ConfigError("config: field 'dt' must be positive and finite");
  }
  if (cfg.t_final < cfg.dt) {
    throw ConfigError("config: field 't_final' must be at least dt");
  }
  if (cfg.n_samples < 1) {
    throw ConfigError("config: field 'n_samples' must be at least 1");
  }
  if (cfg.n_repeats < 1) {
    throw ConfigError("config: field 'n_repeats' must be at least 1");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

LindbladModel build_model(const ModelSpec& spec) {
  if (spec.name == "decay2d") return decay_model(spec.decay);
  if (spec.name == "cavity_qed") return cavity_model(spec.cavity);
  if (spec.name == "custom") {
    return make_model(spec.hamiltonian, spec.lindblad_ops);
  }
  throw ConfigError("build_model: unknown model '" + spec.name + "'");
}

namespace {

CMatrix place_pauli(const ObservableSpec& spec, const ModelSpec& model_spec,
                    const LindbladModel& model) {
  CMatrix sigma;
  if (spec.name == "sigma_x") sigma = pauli_x();
  else if (spec.name == "sigma_y") sigma = pauli_y();
  else sigma = pauli_z();
  if (model.dim == 2) return sigma;
  if (model_spec.name == "cavity_qed") {
    return kron(sigma, CMatrix::identity(model_spec.cavity.fock_dim));
  }
  throw ConfigError("config: observable '" + spec.name +
                    "' needs a dimension-2 or cavity_qed model");
}

}  // namespace

std::vector<Observable> build_observables(const ExperimentConfig& cfg,
                                          const LindbladModel& model) {
  std::vector<Observable> out;
  for (const auto& spec : cfg.observables) {
    CMatrix m;
    if (spec.name == "custom") {
      m = spec.matrix;
      if (m.rows != model.dim || m.cols != model.dim) {
        throw ConfigError("config: observable '" + spec.label + "' is " +
                          std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                          " but the model dimension is " + std::to_string(model.dim));
      }
    } else if (spec.name == "number") {
      if (cfg.model.name != "cavity_qed") {
        throw ConfigError("config: observable 'number' needs the cavity_qed model");
      }
      m = kron(CMatrix::identity(2), number_op(cfg.model.cavity.fock_dim));
    } else {
      m = place_pauli(spec, cfg.model, model);
    }
    out.push_back(make_observable(spec.label, std::move(m)));
  }
  return out;
}

StateVector build_initial_state(const ExperimentConfig& cfg,
                                const LindbladModel& model) {
  const InitialStateSpec& spec = cfg.initial_state;
  if (spec.name == "amplitudes") {
    if (spec.amplitudes.size() != static_cast<size_t>(model.dim)) {
      throw ConfigError("config: initial_state.amplitudes has " +
                        std::to_string(spec.amplitudes.size()) +
                        " entries but the model dimension is " +
                        std::to_string(model.dim));
    }
    StateVector psi = spec.amplitudes;
    const double n = vnorm(psi);
    if (std::abs(n - 1.0) > 1e-6) {
      throw ConfigError("config: initial_state.amplitudes norm " +
                        std::to_string(n) + " is not 1 within 1e-6");
    }
    normalize(psi);
    return psi;
  }
  if (spec.name == "plus_vacuum") {
    if (cfg.model.name != "cavity_qed") {
      throw ConfigError("config: initial state 'plus_vacuum' needs the cavity_qed model");
    }
    return tensor(plus_state(), basis_state(cfg.model.cavity.fock_dim, 0));
  }
  if (model.dim < 2) {
    throw ConfigError("config: named initial states need dimension >= 2");
  }
  if (spec.name == "zero") return basis_state(model.dim, 0);
  if (spec.name == "one") return basis_state(model.dim, 1);
  if (spec.name == "plus") {
    if (model.dim != 2) {
      throw ConfigError("config: initial state 'plus' needs a dimension-2 model");
    }
    return plus_state();
  }
  throw ConfigError("config: unknown initial state '" + spec.name + "'");
}

TimeGrid build_grid(const ExperimentConfig& cfg) {
  const double steps = cfg.t_final / cfg.dt;
  const int n_steps = static_cast<int>(std::llround(steps));
  if (n_steps < 1 ||
      std::abs(n_steps * cfg.dt - cfg.t_final) > 1e-9 * std::max(1.0, cfg.t_final)) {
    throw ConfigError("config: t_final must be an integer multiple of dt");
  }
  return make_grid(0.0, cfg.dt, n_steps);
}

}  // namespace unravel
