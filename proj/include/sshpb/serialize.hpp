#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sshpb/model.hpp"
#include "sshpb/steadystate.hpp"
#include "sshpb/subspaces.hpp"
#include "sshpb/sweeps.hpp"
#include "sshpb/version.hpp"

namespace sshpb {

using Json = nlohmann::ordered_json;

/// Shortest decimal form that round-trips; "nan"/"inf" are written as-is.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Json optional_number(const std::optional<double>& v) {
  return (v && std::isfinite(*v)) ? Json(*v) : Json(nullptr);
}
inline Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const ChainParams& p) {
  return Json{{"n_qubits", p.n_qubits}, {"g", p.g},         {"j1", p.j1},       {"j2", p.j2},
              {"delta", p.delta},       {"eta", p.eta},     {"kappa", p.kappa}, {"gamma", p.gamma},
              {"n_max", p.n_max},       {"delta_g", p.delta_g}, {"delta_omega1", p.delta_omega1}};
}

inline Json to_json(const PhotonStatistics& s) {
  Json dev = Json::array();
  for (double d : s.poisson_deviation) dev.push_back(finite_or_null(d));
  return Json{{"g2_0", optional_number(s.g2_0)}, {"mean_n", s.mean_n}, {"p_n", s.p_n}, {"poisson_deviation", dev}};
}

inline Json to_json(const QllGraph& g) {
  Json nodes = Json::array();
  for (std::size_t k = 0; k < g.nodes.size(); ++k) {
    const auto& s = g.nodes.states[k];
    nodes.push_back({{"id", k},
                     {"label", g.nodes.labels[k]},
                     {"fock", s.fock},
                     {"bits", s.bits},
                     {"coordinates", g.coordinates[k]}});
  }
  Json edges = Json::array();
  for (const auto& e : g.edges) edges.push_back({{"source", e.a}, {"target", e.b}, {"weight", e.weight}});
  return Json{{"format", "sshpb-qll"}, {"version", kFileFormatVersion}, {"n_exc", g.nodes.n_exc},
              {"n_qubits", g.nodes.n_qubits}, {"nodes", nodes}, {"edges", edges}};
}

/// Tab-separated edge list: source, target, weight, source label, target label.
inline void write_edge_list(std::ostream& os, const QllGraph& g) {
  os << "# sshpb-qll v" << kFileFormatVersion << " n_exc=" << g.nodes.n_exc << " n_qubits=" << g.nodes.n_qubits << "\n";
  os << "# source\ttarget\tweight\tsource_label\ttarget_label\n";
  for (const auto& e : g.edges) {
    os << e.a << '\t' << e.b << '\t' << format_double(e.weight) << '\t' << g.nodes.labels[e.a] << '\t'
       << g.nodes.labels[e.b] << "\n";
  }
}

inline const char* kSweepCsvColumns = "axis1,axis2,g2_0,log10_g2_0,mean_n,converged,solve_ms";

/// Versioned header line, column line, then one line per grid point. Undefined
/// values are empty fields.
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "# sshpb-sweep v" << kFileFormatVersion << " command=" << r.metadata.command << " axis1=" << r.grid.axis1.name
     << " axis2=" << (r.grid.axis2 ? r.grid.axis2->name : "") << "\n";
  os << kSweepCsvColumns << "\n";
  for (const auto& row : r.rows) {
    os << format_double(row.axis1) << ',' << (std::isnan(row.axis2) ? "" : format_double(row.axis2)) << ',';
    if (row.g2_0) {
      os << format_double(*row.g2_0) << ',' << (*row.g2_0 > 0.0 ? format_double(std::log10(*row.g2_0)) : "");
    } else {
      os << ',';
    }
    os << ',' << (row.ok() ? format_double(row.mean_n) : "") << ',' << (row.converged ? 1 : 0) << ','
       << format_double(std::round(row.solve_ms * 1000.0) / 1000.0) << "\n";
  }
}

inline Json to_json(const SweepResult& r) {
  auto axis = [](const Axis& a) { return Json{{"name", a.name}, {"values", a.values}}; };
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json j{{"axis1", row.axis1},
           {"axis2", finite_or_null(row.axis2)},
           {"g2_0", optional_number(row.g2_0)},
           {"log10_g2_0", row.g2_0 && *row.g2_0 > 0.0 ? Json(std::log10(*row.g2_0)) : Json(nullptr)},
           {"mean_n", row.mean_n},
           {"p_n", row.p_n},
           {"converged", row.converged},
           {"n_max", row.n_max},
           {"solve_ms", row.solve_ms}};
    if (!row.ok()) j["error"] = row.error;
    rows.push_back(std::move(j));
  }
  Json contour = Json::array();
  for (const auto& c : poisson_contour(r)) contour.push_back({c.axis1, c.axis2});
  return Json{{"format", "sshpb-sweep"},
              {"version", kFileFormatVersion},
              {"metadata",
               {{"command", r.metadata.command},
                {"code_version", r.metadata.version},
                {"timestamp", r.metadata.timestamp},
                {"params", to_json(r.metadata.params)}}},
              {"grid", {{"axis1", axis(r.grid.axis1)}, {"axis2", r.grid.axis2 ? axis(*r.grid.axis2) : Json(nullptr)}}},
              {"summary", {{"points", r.rows.size()}, {"failures", r.failures()}, {"unconverged", r.unconverged()}}},
              {"rows", rows},
              {"g2_unity_contour", contour}};
}

inline void write_optimal_csv(std::ostream& os, const std::vector<OptimalPoint>& pts) {
  os << "# sshpb-optimal v" << kFileFormatVersion << "\n";
  os << "eta_over_gamma,delta_over_g,g2_0,log10_g2_0,mean_n,converged,argmin_delta_over_g,argmin_g2_0\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& p : pts) {
    os << format_double(p.eta_over_gamma) << ',' << format_double(p.delta_over_g) << ',' << opt(p.g2_0) << ','
       << (p.g2_0 && *p.g2_0 > 0.0 ? format_double(std::log10(*p.g2_0)) : "") << ',' << format_double(p.mean_n) << ','
       << (p.converged ? 1 : 0) << ',' << opt(p.argmin_delta_over_g) << ',' << opt(p.argmin_g2_0) << "\n";
  }
}

inline Json to_json(const std::vector<OptimalPoint>& pts) {
  Json rows = Json::array();
  for (const auto& p : pts) {
    Json j{{"eta_over_gamma", p.eta_over_gamma}, {"delta_over_g", p.delta_over_g}, {"g2_0", optional_number(p.g2_0)},
           {"mean_n", p.mean_n},  {"converged", p.converged}, {"n_max", p.n_max},
           {"argmin_delta_over_g", optional_number(p.argmin_delta_over_g)}, {"argmin_g2_0", optional_number(p.argmin_g2_0)}};
    if (!p.error.empty()) j["error"] = p.error;
    rows.push_back(std::move(j));
  }
  return Json{{"format", "sshpb-optimal"}, {"version", kFileFormatVersion}, {"rows", rows}};
}

inline void write_deviation_csv(std::ostream& os, const std::vector<DeviationRow>& rows) {
  os << "# sshpb-deviation v" << kFileFormatVersion << "\n";
  os << "n_qubits,eta_over_gamma,delta_over_g,mean_n,dev0,dev1,dev2,dev3,converged,flagged\n";
  for (const auto& r : rows) {
    os << r.n_qubits << ',' << format_double(r.eta_over_gamma) << ',' << format_double(r.delta_over_g) << ','
       << format_double(r.mean_n);
    for (int n = 0; n <= kDeviationMaxPhotons; ++n) {
      os << ',' << (static_cast<std::size_t>(n) < r.deviation.size() ? format_double(r.deviation[static_cast<std::size_t>(n)]) : "");
    }
    os << ',' << (r.converged ? 1 : 0) << ',' << (r.flagged ? 1 : 0) << "\n";
  }
}

inline Json to_json(const std::vector<DeviationRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json dev = Json::array();
    for (double d : r.deviation) dev.push_back(finite_or_null(d));
    Json j{{"n_qubits", r.n_qubits}, {"eta_over_gamma", r.eta_over_gamma}, {"delta_over_g", r.delta_over_g},
           {"mean_n", r.mean_n},     {"deviation", dev},                 {"converged", r.converged},
           {"flagged", r.flagged}};
    if (!r.error.empty()) j["error"] = r.error;
    out.push_back(std::move(j));
  }
  return Json{{"format", "sshpb-deviation"}, {"version", kFileFormatVersion}, {"rows", out}};
}

}  // namespace sshpb
