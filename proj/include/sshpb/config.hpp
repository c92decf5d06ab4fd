#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sshpb/errors.hpp"
#include "sshpb/model.hpp"
#include "sshpb/steadystate.hpp"
#include "sshpb/sweeps.hpp"

namespace sshpb {

enum class Command { Spectrum, Steady, Map, Optimal, Deviation, RobustnessG, RobustnessW1 };

inline const std::map<std::string, Command>& command_names() {
  static const std::map<std::string, Command> m = {
      {"spectrum", Command::Spectrum},          {"steady", Command::Steady},
      {"map", Command::Map},                    {"optimal", Command::Optimal},
      {"deviation", Command::Deviation},        {"robustness-g", Command::RobustnessG},
      {"robustness-w1", Command::RobustnessW1}};
  return m;
}

inline std::string to_string(Command c) {
  for (const auto& [name, value] : command_names()) {
    if (value == c) return name;
  }
  return "?";
}

inline Command parse_command(const std::string& s) {
  const auto it = command_names().find(s);
  if (it == command_names().end()) throw ConfigError("unknown command '" + s + "'");
  return it->second;
}

/// Either an explicit list or an inclusive start/stop/step range.
struct GridSpec {
  std::vector<double> values;
  std::optional<double> start, stop, step;

  bool is_range() const { return step.has_value(); }
  std::vector<double> resolve(const std::string& name) const {
    return is_range() ? Axis::range(name, *start, *stop, *step).values : values;
  }
  static GridSpec range(double a, double b, double s) { return {{}, a, b, s}; }
  static GridSpec list(std::vector<double> v) { return {std::move(v), {}, {}, {}}; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct OutputSpec {
  std::string path;  // empty: summary only
  std::string format = "csv";

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

struct SolverSpec {
  std::string method = "krylov";
  bool check_truncation = true;
  double truncation_rtol = 1e-3;
  int max_extra_photons = 4;

  friend bool operator==(const SolverSpec&, const SolverSpec&) = default;
};

/// Fully resolved run description. Frequencies and rates in `params` are in units
/// of `params.gamma`; physical_params() converts to absolute values.
struct RunConfig {
  Command command = Command::Steady;
  ChainParams params;
  std::map<std::string, GridSpec> grids;
  std::vector<int> n_qubits_list;  // deviation
  std::vector<int> n_exc_list;     // spectrum
  OutputSpec output;
  SolverSpec solver;
  bool validate_regime = true;
  std::vector<std::string> warnings;  // regime violations found while parsing

  ChainParams physical_params() const {
    ChainParams p = params;
    const double u = params.gamma;
    p.g *= u;
    p.j1 *= u;
    p.j2 *= u;
    p.delta *= u;
    p.eta *= u;
    p.kappa *= u;
    p.delta_g *= u;
    p.delta_omega1 *= u;
    return p;
  }

  SteadyStateOptions steady_options() const {
    SteadyStateOptions o;
    o.solver.kind = solver.method == "direct" ? SolverKind::Direct : SolverKind::Krylov;
    o.check_truncation = solver.check_truncation;
    o.truncation_rtol = solver.truncation_rtol;
    o.max_extra_photons = solver.max_extra_photons;
    return o;
  }

  std::vector<double> grid(const std::string& name) const {
    const auto it = grids.find(name);
    return it == grids.end() ? std::vector<double>{} : it->second.resolve(name);
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

using Json = nlohmann::ordered_json;

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline double get_number(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

inline int get_int(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return v.get<int>();
}

inline GridSpec parse_grid(const Json& v, const std::string& key) {
  if (v.is_array()) {
    std::vector<double> values;
    for (const auto& x : v) values.push_back(get_number(x, key));
    return GridSpec::list(std::move(values));
  }
  if (v.is_object()) {
    reject_unknown(v, {"start", "stop", "step"}, "grids." + key);
    for (const char* k : {"start", "stop", "step"}) {
      if (!v.contains(k)) throw ConfigError("grids." + key + " needs '" + k + "'");
    }
    return GridSpec::range(get_number(v["start"], key + ".start"), get_number(v["stop"], key + ".stop"),
                           get_number(v["step"], key + ".step"));
  }
  throw ConfigError("grids." + key + " must be a list or {start, stop, step}");
}

inline std::vector<int> parse_int_list(const Json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("grids." + key + " must be a list of integers");
  std::vector<int> out;
  for (const auto& x : v) out.push_back(get_int(x, key));
  return out;
}

struct GridDefaults {
  std::map<std::string, GridSpec> grids;
  std::vector<int> n_qubits;
  std::vector<int> n_exc;
};

inline GridDefaults grid_defaults(Command c) {
  const auto detuning = GridSpec::range(-3.0, 3.0, 0.05);
  switch (c) {
    case Command::Map: return {{{"delta_over_g", detuning}, {"eta_over_gamma", GridSpec::range(0.1, 2.0, 0.05)}}, {}, {}};
    case Command::Optimal: return {{{"eta_over_gamma", GridSpec::range(0.1, 2.0, 0.05)}}, {}, {}};
    case Command::Deviation: return {{{"eta_over_gamma", GridSpec::list({0.5})}}, {1, 2, 4}, {}};
    case Command::RobustnessG:
      return {{{"delta_over_g", detuning}, {"delta_g_over_gamma", GridSpec::range(-5.0, 5.0, 0.25)}}, {}, {}};
    case Command::RobustnessW1:
      return {{{"delta_over_g", detuning}, {"delta_omega1_over_gamma", GridSpec::range(-5.0, 5.0, 0.25)}}, {}, {}};
    case Command::Spectrum: return {{}, {}, {1, 2}};
    case Command::Steady: return {};
  }
  return {};
}

/// Grid keys each command accepts (defaults aside, optimal also takes a detuning grid).
inline std::set<std::string> allowed_grids(Command c) {
  switch (c) {
    case Command::Map: return {"delta_over_g", "eta_over_gamma"};
    case Command::Optimal: return {"eta_over_gamma", "delta_over_g"};
    case Command::Deviation: return {"eta_over_gamma", "n_qubits"};
    case Command::RobustnessG: return {"delta_over_g", "delta_g_over_gamma"};
    case Command::RobustnessW1: return {"delta_over_g", "delta_omega1_over_gamma"};
    case Command::Spectrum: return {"n_exc"};
    case Command::Steady: return {};
  }
  return {};
}

inline std::string position_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Parses and validates a JSON run configuration, applying defaults
/// (g = 10, kappa = 0.5, J1 = sqrt(2) g, J2 = 0.2 g, gamma = 1). `cli_command`,
/// when given, must agree with any "command" key in the document.
inline RunConfig parse_config(const std::string& text, std::optional<Command> cli_command = std::nullopt) {
  using detail::Json;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("parse error at " + detail::position_of(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown(doc, {"command", "params", "grids", "output", "solver", "validate_regime"}, "config");

  RunConfig cfg;
  // Parameters
  const Json params = doc.value("params", Json::object());
  if (!params.is_object()) throw ConfigError("'params' must be an object");
  detail::reject_unknown(params,
                         {"n_qubits", "g", "j1", "j2", "delta", "eta", "kappa", "gamma", "n_max", "delta_g", "delta_omega1"},
                         "params");
  ChainParams& p = cfg.params;
  p = ChainParams{};
  p.n_qubits = params.contains("n_qubits") ? detail::get_int(params["n_qubits"], "n_qubits") : 4;
  p.n_max = params.contains("n_max") ? detail::get_int(params["n_max"], "n_max") : 5;
  auto num = [&](const char* key, double fallback) {
    return params.contains(key) ? detail::get_number(params[key], key) : fallback;
  };
  p.gamma = num("gamma", 1.0);
  p.g = num("g", 10.0);
  p.j1 = num("j1", std::sqrt(2.0) * p.g);
  p.j2 = num("j2", 0.2 * p.g);
  p.delta = num("delta", 0.0);
  p.eta = num("eta", 0.5);
  p.kappa = num("kappa", 0.5);
  p.delta_g = num("delta_g", 0.0);
  p.delta_omega1 = num("delta_omega1", 0.0);

  if (doc.contains("validate_regime")) {
    if (!doc["validate_regime"].is_boolean()) throw ConfigError("'validate_regime' must be a boolean");
    cfg.validate_regime = doc["validate_regime"].get<bool>();
  }

  try {
    validate(cfg.physical_params());
  } catch (const ParamError& e) {
    throw ConfigError(e.what());
  }

  if (doc.contains("command")) {
    if (!doc["command"].is_string()) throw ConfigError("'command' must be a string");
    cfg.command = parse_command(doc["command"].get<std::string>());
    if (cli_command && *cli_command != cfg.command) {
      throw ConfigError("command '" + to_string(*cli_command) + "' conflicts with config command '" +
                        to_string(cfg.command) + "'");
    }
  } else if (cli_command) {
    cfg.command = *cli_command;
  } else {
    throw ConfigError("missing 'command'");
  }

  // Grids
  auto defaults = detail::grid_defaults(cfg.command);
  cfg.grids = defaults.grids;
  cfg.n_qubits_list = defaults.n_qubits;
  cfg.n_exc_list = defaults.n_exc;
  const Json grids = doc.value("grids", Json::object());
  if (!grids.is_object()) throw ConfigError("'grids' must be an object");
  const auto allowed = detail::allowed_grids(cfg.command);
  for (const auto& [key, value] : grids.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in grids for command '" + to_string(cfg.command) + "'");
    }
    if (key == "n_qubits") cfg.n_qubits_list = detail::parse_int_list(value, key);
    else if (key == "n_exc") cfg.n_exc_list = detail::parse_int_list(value, key);
    else cfg.grids[key] = detail::parse_grid(value, key);
  }

  // Output
  if (doc.contains("output")) {
    const Json& out = doc["output"];
    if (!out.is_object()) throw ConfigError("'output' must be an object");
    detail::reject_unknown(out, {"path", "format"}, "output");
    if (out.contains("path")) {
      if (!out["path"].is_string()) throw ConfigError("output.path must be a string");
      cfg.output.path = out["path"].get<std::string>();
    }
    if (out.contains("format")) {
      if (!out["format"].is_string()) throw ConfigError("output.format must be a string");
      cfg.output.format = out["format"].get<std::string>();
    } else if (cfg.output.path.size() >= 5 && cfg.output.path.ends_with(".json")) {
      cfg.output.format = "json";
    }
  }
  if (cfg.output.format != "csv" && cfg.output.format != "json") {
    throw ConfigError("output.format must be 'csv' or 'json'");
  }

  // Solver
  if (doc.contains("solver")) {
    const Json& s = doc["solver"];
    if (!s.is_object()) throw ConfigError("'solver' must be an object");
    detail::reject_unknown(s, {"method", "check_truncation", "truncation_rtol", "max_extra_photons"}, "solver");
    if (s.contains("method")) {
      if (!s["method"].is_string()) throw ConfigError("solver.method must be a string");
      cfg.solver.method = s["method"].get<std::string>();
    }
    if (s.contains("check_truncation")) {
      if (!s["check_truncation"].is_boolean()) throw ConfigError("solver.check_truncation must be a boolean");
      cfg.solver.check_truncation = s["check_truncation"].get<bool>();
    }
    if (s.contains("truncation_rtol")) cfg.solver.truncation_rtol = detail::get_number(s["truncation_rtol"], "truncation_rtol");
    if (s.contains("max_extra_photons")) {
      cfg.solver.max_extra_photons = detail::get_int(s["max_extra_photons"], "max_extra_photons");
    }
  }
  if (cfg.solver.method != "krylov" && cfg.solver.method != "direct") {
    throw ConfigError("solver.method must be 'krylov' or 'direct'");
  }
  if (!(cfg.solver.truncation_rtol > 0.0)) throw ConfigError("solver.truncation_rtol must be > 0");
  if (cfg.solver.max_extra_photons < 0) throw ConfigError("solver.max_extra_photons must be >= 0");

  // Validation
  try {
    const auto phys = cfg.physical_params();
    cfg.warnings = validate(phys, cfg.validate_regime ? RegimeCheck::Warn : RegimeCheck::Skip);
    if (cfg.command != Command::Spectrum && phys.n_max < 2) throw ParamError("n_max must be >= 2 for photon correlations");
    for (const auto& [name, spec] : cfg.grids) {
      if (spec.is_range() && (!(*spec.step > 0.0) || *spec.stop < *spec.start)) {
        throw ParamError("grids." + name + " needs step > 0 and start <= stop");
      }
      const auto values = spec.resolve(name);
      if (values.empty()) throw ParamError("grids." + name + " is empty");
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw ParamError("grids." + name + " has non-finite values");
        if (i > 0 && !(values[i] > values[i - 1])) throw ParamError("grids." + name + " must be strictly increasing");
      }
    }
    for (int n : cfg.n_qubits_list) {
      ChainParams q = phys;
      q.n_qubits = n;
      validate(q);
    }
    for (int n : cfg.n_exc_list) {
      if (n < 0) throw ParamError("grids.n_exc entries must be >= 0");
      if (n > phys.n_max) throw ParamError("grids.n_exc entry " + std::to_string(n) + " exceeds n_max");
    }
  } catch (const ParamError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

/// Resolved configuration as a JSON document; parse_config(echo_config(c)) == c.
inline std::string echo_config(const RunConfig& cfg) {
  using detail::Json;
  const ChainParams& p = cfg.params;
  Json grids = Json::object();
  for (const auto& [name, spec] : cfg.grids) {
    grids[name] = spec.is_range() ? Json{{"start", *spec.start}, {"stop", *spec.stop}, {"step", *spec.step}}
                                  : Json(spec.values);
  }
  if (cfg.command == Command::Deviation) grids["n_qubits"] = cfg.n_qubits_list;
  if (cfg.command == Command::Spectrum) grids["n_exc"] = cfg.n_exc_list;
  Json output{{"format", cfg.output.format}};
  if (!cfg.output.path.empty()) output["path"] = cfg.output.path;
  const Json doc{{"command", to_string(cfg.command)},
                 {"params",
                  {{"n_qubits", p.n_qubits},
                   {"g", p.g},
                   {"j1", p.j1},
                   {"j2", p.j2},
                   {"delta", p.delta},
                   {"eta", p.eta},
                   {"kappa", p.kappa},
                   {"gamma", p.gamma},
                   {"n_max", p.n_max},
                   {"delta_g", p.delta_g},
                   {"delta_omega1", p.delta_omega1}}},
                 {"grids", grids},
                 {"output", output},
                 {"solver",
                  {{"method", cfg.solver.method},
                   {"check_truncation", cfg.solver.check_truncation},
                   {"truncation_rtol", cfg.solver.truncation_rtol},
                   {"max_extra_photons", cfg.solver.max_extra_photons}}},
                 {"validate_regime", cfg.validate_regime}};
  return doc.dump(2) + "\n";
}

}  // namespace sshpb
