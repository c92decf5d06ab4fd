#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "sshpb/config.hpp"
#include "sshpb/serialize.hpp"
#include "sshpb/steadystate.hpp"
#include "sshpb/subspaces.hpp"
#include "sshpb/sweeps.hpp"

namespace sshpb {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitSolver = 3, kExitIo = 4 };

struct RunOptions {
  unsigned workers = 0;  // 0: all available cores
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

/// Reads a file into a string; throws IoError.
inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path + "'");
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << text;
  os.flush();
  if (!os) throw IoError("cannot write '" + path.string() + "'");
}

/// Path of the resolved-config echo written beside an output file.
inline std::filesystem::path echo_path(const std::filesystem::path& output) {
  auto p = output;
  p.replace_extension(".config.json");
  return p;
}

namespace detail {

inline std::string fmt(double v) { return format_double(v); }

inline std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : "n/a"; }

inline Json embedded_config(const RunConfig& cfg) { return Json::parse(echo_config(cfg)); }

inline Json spectrum_json(const RunConfig& cfg, const ChainParams& p, std::vector<std::pair<SubspaceSpectrum, QllGraph>>& blocks) {
  Json out = Json::array();
  const double tol = default_zero_tolerance(p);
  for (auto& [spec, graph] : blocks) {
    Json modes = Json::array();
    for (const auto& z : zero_modes(spec, tol)) {
      const auto loc = edge_localization(z.vector, spec.basis);
      Json amps = Json::array();
      for (std::size_t k = 0; k < spec.basis.size(); ++k) {
        const Complex c = z.vector(static_cast<Index>(k));
        amps.push_back({{"label", spec.basis.labels[k]}, {"re", c.real()}, {"im", c.imag()}});
      }
      modes.push_back({{"energy", z.energy},
                       {"amplitudes", amps},
                       {"localization",
                        {{"single_photon_amplitude", std::abs(loc.single_photon_amplitude)},
                         {"max_even_site_amplitude", loc.max_even_site_amplitude},
                         {"two_photon_weight", loc.two_photon_weight},
                         {"two_qubit_weight", loc.two_qubit_weight},
                         {"inverse_participation_ratio", loc.inverse_participation_ratio}}}});
    }
    std::vector<double> ev(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.eigenvalues.size());
    out.push_back({{"n_exc", spec.basis.n_exc},
                   {"labels", spec.basis.labels},
                   {"eigenvalues", ev},
                   {"zero_modes", modes},
                   {"graph", to_json(graph)}});
  }
  return Json{{"format", "sshpb-spectrum"},
              {"version", kFileFormatVersion},
              {"config", embedded_config(cfg)},
              {"params", to_json(p)},
              {"blocks", out}};
}

inline void write_spectrum_csv(std::ostream& os, const ChainParams& p,
                               const std::vector<std::pair<SubspaceSpectrum, QllGraph>>& blocks) {
  os << "# sshpb-spectrum v" << kFileFormatVersion << " n_qubits=" << p.n_qubits << "\n";
  os << "n_exc,index,energy,zero_mode\n";
  const double tol = default_zero_tolerance(p);
  for (const auto& [spec, graph] : blocks) {
    for (Index k = 0; k < spec.eigenvalues.size(); ++k) {
      const double e = spec.eigenvalues(k);
      os << spec.basis.n_exc << ',' << k << ',' << format_double(e) << ',' << (std::abs(e) <= tol ? 1 : 0) << "\n";
    }
  }
}

inline int run_spectrum(const RunConfig& cfg, const RunOptions& ro, std::ostream& os) {
  ChainParams p = cfg.physical_params();
  p.eta = 0.0;  // the excitation-number blocks are those of the undriven chain
  const auto h = build_hamiltonian(p);
  std::vector<std::pair<SubspaceSpectrum, QllGraph>> blocks;
  for (int n : cfg.n_exc_list) {
    auto spec = project_subspace(h, p.space(), n);
    auto graph = qll_graph(spec, p);
    blocks.emplace_back(std::move(spec), std::move(graph));
  }
  const double tol = default_zero_tolerance(p);
  for (const auto& [spec, graph] : blocks) {
    const auto modes = zero_modes(spec, tol);
    os << "n_exc=" << spec.basis.n_exc << ": " << spec.basis.size() << " states, " << graph.edges.size()
       << " couplings, " << modes.size() << " zero mode(s)\n";
    os << "  eigenvalues:";
    for (Index k = 0; k < spec.eigenvalues.size(); ++k) os << ' ' << fmt(spec.eigenvalues(k));
    os << "\n";
    for (const auto& z : modes) {
      const auto loc = edge_localization(z.vector, spec.basis);
      if (spec.basis.n_exc == 1) {
        os << "  zero mode: |photon| = " << fmt(std::abs(loc.single_photon_amplitude))
           << ", max even-site amplitude = " << fmt(loc.max_even_site_amplitude) << "\n";
      } else if (spec.basis.n_exc == 2) {
        os << "  zero mode: two-photon weight = " << fmt(loc.two_photon_weight)
           << ", photon-free weight = " << fmt(loc.two_qubit_weight) << "\n";
      }
    }
  }
  if (!cfg.output.path.empty()) {
    const std::filesystem::path path(cfg.output.path);
    if (cfg.output.format == "json") {
      write_text_file(path, spectrum_json(cfg, p, blocks).dump(2) + "\n");
    } else {
      std::ostringstream ss;
      write_spectrum_csv(ss, p, blocks);
      write_text_file(path, ss.str());
    }
    for (const auto& [spec, graph] : blocks) {
      auto edges = path;
      edges.replace_extension(".qll" + std::to_string(spec.basis.n_exc) + ".tsv");
      std::ostringstream ss;
      write_edge_list(ss, graph);
      write_text_file(edges, ss.str());
    }
  }
  (void)ro;
  return kExitOk;
}

inline int run_steady(const RunConfig& cfg, std::ostream& os) {
  const auto report = analyze_steady_state(cfg.physical_params(), cfg.steady_options());
  const auto& s = report.stats;
  os << "g2(0) = " << fmt_opt(s.g2_0);
  if (s.g2_0) os << (*s.g2_0 < 1.0 ? " (sub-Poissonian)" : " (not sub-Poissonian)");
  os << "\n<a^dag a> = " << fmt(s.mean_n) << "\n";
  os << "n_max used = " << report.params.n_max << ", truncation " << (report.converged ? "converged" : "NOT converged")
     << " (relative change g2 " << fmt(report.g2_change) << ", <n> " << fmt(report.mean_n_change) << ")\n";
  for (std::size_t n = 0; n < s.p_n.size() && n <= 4; ++n) os << "P(" << n << ") = " << fmt(s.p_n[n]) << "\n";
  if (!report.converged) os << "warning: photon-number truncation not converged\n";

  if (!cfg.output.path.empty()) {
    if (cfg.output.format == "json") {
      const Json doc{{"format", "sshpb-steady"},
                     {"version", kFileFormatVersion},
                     {"config", embedded_config(cfg)},
                     {"params", to_json(report.params)},
                     {"statistics", to_json(s)},
                     {"converged", report.converged},
                     {"g2_change", finite_or_null(report.g2_change)},
                     {"mean_n_change", finite_or_null(report.mean_n_change)}};
      write_text_file(cfg.output.path, doc.dump(2) + "\n");
    } else {
      std::ostringstream ss;
      ss << "# sshpb-steady v" << kFileFormatVersion << " g2_0=" << (s.g2_0 ? fmt(*s.g2_0) : "") << " mean_n="
         << fmt(s.mean_n) << " n_max=" << report.params.n_max << " converged=" << (report.converged ? 1 : 0) << "\n";
      ss << "n,p_n,poisson,deviation\n";
      for (std::size_t n = 0; n < s.p_n.size(); ++n) {
        const double dev = s.poisson_deviation[n];
        ss << n << ',' << fmt(s.p_n[n]) << ',' << fmt(poisson_probability(s.mean_n, static_cast<int>(n))) << ','
           << (std::isfinite(dev) ? fmt(dev) : "") << "\n";
      }
      write_text_file(cfg.output.path, ss.str());
    }
  }
  return kExitOk;
}

inline void write_sweep_output(const RunConfig& cfg, const SweepResult& r) {
  if (cfg.output.path.empty()) return;
  if (cfg.output.format == "json") {
    Json doc = to_json(r);
    doc["config"] = embedded_config(cfg);
    write_text_file(cfg.output.path, doc.dump(2) + "\n");
  } else {
    std::ostringstream ss;
    write_sweep_csv(ss, r);
    write_text_file(cfg.output.path, ss.str());
  }
}

inline void summarize_sweep(const SweepResult& r, std::ostream& os) {
  os << r.rows.size() << " points, " << r.failures() << " failed, " << r.unconverged() << " unconverged\n";
  const auto minima = argmin_per_slice(r);
  for (std::size_t k = 0; k < minima.size(); ++k) {
    if (r.grid.axis2) os << r.grid.axis2->name << " = " << fmt(r.grid.axis2->values[k]) << ": ";
    if (minima[k]) {
      os << "min g2(0) = " << fmt(minima[k]->g2_0) << " at " << r.grid.axis1.name << " = " << fmt(minima[k]->position);
      const auto windows = sub_poissonian_windows(r.slice(k));
      os << ", " << windows.size() << " sub-Poissonian window(s)\n";
    } else {
      os << "no valid g2(0)\n";
    }
  }
}

inline int sweep_status(std::size_t failures, std::size_t unconverged, std::ostream& os) {
  if (failures + unconverged > 0) {
    os << "warnings: " << failures << " failed point(s), " << unconverged << " unconverged point(s)\n";
  }
  return kExitOk;
}

inline int run_map_like(const RunConfig& cfg, const RunOptions& ro, std::ostream& os) {
  const ChainParams p = cfg.physical_params();
  SweepOptions so{cfg.steady_options(), ro.workers};
  SweepResult r;
  switch (cfg.command) {
    case Command::Map:
      r = map_detuning_drive(p, cfg.grid("delta_over_g"), cfg.grid("eta_over_gamma"), so);
      break;
    case Command::RobustnessG:
      r = robustness_coupling(p, cfg.grid("delta_g_over_gamma"), cfg.grid("delta_over_g"), so);
      break;
    default:
      r = robustness_frequency(p, cfg.grid("delta_omega1_over_gamma"), cfg.grid("delta_over_g"), so);
      break;
  }
  summarize_sweep(r, os);
  if (cfg.command != Command::Map) {
    os << "mean photon number spread at resonance = " << fmt(mean_n_flatness(r)) << "\n";
  }
  write_sweep_output(cfg, r);
  return sweep_status(r.failures(), r.unconverged(), os);
}

inline int run_optimal(const RunConfig& cfg, const RunOptions& ro, std::ostream& os) {
  const ChainParams p = cfg.physical_params();
  SweepOptions so{cfg.steady_options(), ro.workers};
  const auto pts = optimal_correlation_curve(p, cfg.grid("eta_over_gamma"), cfg.grid("delta_over_g"), so);
  std::size_t failures = 0, unconverged = 0;
  for (const auto& pt : pts) {
    os << "eta/gamma = " << fmt(pt.eta_over_gamma) << ": g2(0) = " << fmt_opt(pt.g2_0) << ", <n> = " << fmt(pt.mean_n)
       << (pt.converged ? "" : " [unconverged]");
    if (pt.argmin_delta_over_g) os << ", grid argmin at delta/g = " << fmt(*pt.argmin_delta_over_g);
    os << "\n";
    if (!pt.error.empty()) ++failures;
    else if (!pt.converged) ++unconverged;
  }
  if (!cfg.output.path.empty()) {
    if (cfg.output.format == "json") {
      Json doc = to_json(pts);
      doc["config"] = embedded_config(cfg);
      doc["timestamp"] = utc_timestamp();
      write_text_file(cfg.output.path, doc.dump(2) + "\n");
    } else {
      std::ostringstream ss;
      write_optimal_csv(ss, pts);
      write_text_file(cfg.output.path, ss.str());
    }
  }
  return sweep_status(failures, unconverged, os);
}

inline int run_deviation(const RunConfig& cfg, const RunOptions& ro, std::ostream& os) {
  std::vector<ChainParams> chains;
  for (int n : cfg.n_qubits_list) {
    ChainParams p = cfg.physical_params();
    p.n_qubits = n;
    chains.push_back(p);
  }
  SweepOptions so{cfg.steady_options(), ro.workers};
  const auto rows = photon_deviation_panel(chains, cfg.grid("eta_over_gamma"), so);
  std::size_t failures = 0, unconverged = 0;
  for (const auto& r : rows) {
    os << "N_a = " << r.n_qubits << ", eta/gamma = " << fmt(r.eta_over_gamma) << ": <n> = " << fmt(r.mean_n);
    if (r.flagged) {
      os << " [flagged]";
    } else {
      os << ", deviation n=0..3:";
      for (double d : r.deviation) os << ' ' << fmt(d);
    }
    os << (r.converged ? "" : " [unconverged]") << "\n";
    if (!r.error.empty()) ++failures;
    else if (!r.converged) ++unconverged;
  }
  if (!cfg.output.path.empty()) {
    if (cfg.output.format == "json") {
      Json doc = to_json(rows);
      doc["config"] = embedded_config(cfg);
      doc["timestamp"] = utc_timestamp();
      write_text_file(cfg.output.path, doc.dump(2) + "\n");
    } else {
      std::ostringstream ss;
      write_deviation_csv(ss, rows);
      write_text_file(cfg.output.path, ss.str());
    }
  }
  return sweep_status(failures, unconverged, os);
}

}  // namespace detail

/// Executes a validated configuration: writes the artifacts and the resolved
/// config echo, prints a summary, and returns the process exit code.
inline int run(const RunConfig& cfg, const RunOptions& ro = {}) {
  std::ostream& os = *ro.out;
  const auto t0 = std::chrono::steady_clock::now();
  os << "sshpb " << kVersion << " " << to_string(cfg.command) << "\n";
  for (const auto& w : cfg.warnings) os << "warning: " << w << "\n";
  int code = kExitOk;
  try {
    if (!cfg.output.path.empty()) write_text_file(echo_path(cfg.output.path), echo_config(cfg));
    switch (cfg.command) {
      case Command::Spectrum: code = detail::run_spectrum(cfg, ro, os); break;
      case Command::Steady: code = detail::run_steady(cfg, os); break;
      case Command::Optimal: code = detail::run_optimal(cfg, ro, os); break;
      case Command::Deviation: code = detail::run_deviation(cfg, ro, os); break;
      default: code = detail::run_map_like(cfg, ro, os); break;
    }
  } catch (const IoError& e) {
    *ro.err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    *ro.err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParamError& e) {
    *ro.err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    *ro.err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  os << "wall time " << detail::fmt(std::round(secs * 1000.0) / 1000.0) << " s\n";
  if (!cfg.output.path.empty()) os << "wrote " << cfg.output.path << "\n";
  return code;
}

}  // namespace sshpb
