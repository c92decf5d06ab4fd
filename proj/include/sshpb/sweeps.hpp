#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <ctime>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sshpb/model.hpp"
#include "sshpb/steadystate.hpp"
#include "sshpb/version.hpp"

namespace sshpb {

/// Named parameter axis. Normalised names scale by the baseline g or gamma:
/// delta_over_g, eta_over_gamma, delta_g_over_gamma, delta_omega1_over_gamma.
/// Raw names (delta, eta, delta_g, delta_omega1) set the field directly.
struct Axis {
  std::string name;
  std::vector<double> values;

  /// start, start + step, ..., stop (inclusive). Values are snapped to integer
  /// multiples of `step` so that symmetric ranges are exactly symmetric.
  static Axis range(std::string name, double start, double stop, double step) {
    if (!(step > 0.0) || !std::isfinite(start) || !std::isfinite(stop) || stop < start) {
      throw ParamError("Axis::range: need finite start <= stop and step > 0");
    }
    const auto n = static_cast<long>(std::llround((stop - start) / step));
    Axis a{std::move(name), {}};
    for (long i = 0; i <= n; ++i) {
      double v = start + (stop - start) * static_cast<double>(i) / static_cast<double>(std::max(n, 1L));
      const double k = std::round(v / step);
      if (std::abs(v - k * step) < 1e-9 * step) v = k * step;
      a.values.push_back(v);
    }
    return a;
  }

  std::size_t size() const { return values.size(); }
};

inline const std::vector<std::string>& known_axis_names() {
  static const std::vector<std::string> names = {"delta_over_g", "eta_over_gamma", "delta_g_over_gamma",
                                                 "delta_omega1_over_gamma", "delta", "eta", "delta_g", "delta_omega1"};
  return names;
}

/// Sets the parameter named by `axis` on `p`; normalisations use `base`.
inline void apply_axis(ChainParams& p, const std::string& axis, double v, const ChainParams& base) {
  if (axis == "delta_over_g") p.delta = v * base.g;
  else if (axis == "eta_over_gamma") p.eta = v * base.gamma;
  else if (axis == "delta_g_over_gamma") p.delta_g = v * base.gamma;
  else if (axis == "delta_omega1_over_gamma") p.delta_omega1 = v * base.gamma;
  else if (axis == "delta") p.delta = v;
  else if (axis == "eta") p.eta = v;
  else if (axis == "delta_g") p.delta_g = v;
  else if (axis == "delta_omega1") p.delta_omega1 = v;
  else throw ParamError("unknown sweep axis '" + axis + "'");
}

struct SweepGrid {
  Axis axis1;
  std::optional<Axis> axis2;
  ChainParams baseline;

  std::size_t size() const { return axis1.size() * (axis2 ? axis2->size() : 1); }

  /// Point k in grid order: axis2 outer, axis1 inner.
  ChainParams point(std::size_t k) const {
    ChainParams p = baseline;
    apply_axis(p, axis1.name, axis1.values[k % axis1.size()], baseline);
    if (axis2) apply_axis(p, axis2->name, axis2->values[k / axis1.size()], baseline);
    return p;
  }
};

inline constexpr std::size_t kDefaultGridBudget = 10'000;

inline void validate_grid(const SweepGrid& grid, std::size_t budget = kDefaultGridBudget) {
  auto check_axis = [](const Axis& a) {
    if (std::find(known_axis_names().begin(), known_axis_names().end(), a.name) == known_axis_names().end()) {
      throw ParamError("unknown sweep axis '" + a.name + "'");
    }
    if (a.values.empty()) throw ParamError("axis '" + a.name + "' is empty");
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      if (!std::isfinite(a.values[i])) throw ParamError("axis '" + a.name + "' has non-finite values");
      if (i > 0 && !(a.values[i] > a.values[i - 1])) throw ParamError("axis '" + a.name + "' is not strictly increasing");
    }
  };
  check_axis(grid.axis1);
  if (grid.axis2) {
    check_axis(*grid.axis2);
    if (grid.axis2->name == grid.axis1.name) throw ParamError("sweep axes must differ");
  }
  if (grid.size() > budget) {
    throw ParamError("grid has " + std::to_string(grid.size()) + " points, budget is " + std::to_string(budget));
  }
  validate(grid.baseline);
}

struct SweepRow {
  double axis1 = 0.0;
  double axis2 = std::numeric_limits<double>::quiet_NaN();  // NaN for one-axis sweeps
  std::optional<double> g2_0;
  double mean_n = 0.0;
  std::vector<double> p_n;
  bool converged = false;
  int n_max = 0;  // truncation actually used
  double solve_ms = 0.0;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
  bool sub_poissonian() const { return ok() && g2_0 && *g2_0 < 1.0; }
};

struct SweepMetadata {
  std::string version = kVersion;
  std::string timestamp;
  ChainParams params;
  std::string command;
};

struct SweepResult {
  SweepGrid grid;
  std::vector<SweepRow> rows;
  SweepMetadata metadata;

  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); }));
  }
  std::size_t unconverged() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok() && !r.converged; }));
  }
  std::size_t axis2_count() const { return grid.axis2 ? grid.axis2->size() : 1; }

  /// Rows with the given axis2 index, in axis1 order.
  std::vector<SweepRow> slice(std::size_t axis2_index) const {
    const std::size_t n1 = grid.axis1.size();
    return {rows.begin() + static_cast<std::ptrdiff_t>(axis2_index * n1),
            rows.begin() + static_cast<std::ptrdiff_t>((axis2_index + 1) * n1)};
  }
};

struct SweepOptions {
  SteadyStateOptions steady{};
  unsigned workers = 0;  // 0: hardware concurrency
  std::size_t budget = kDefaultGridBudget;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline SweepRow evaluate_point(const ChainParams& p, const SteadyStateOptions& opts) {
  SweepRow row;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto r = analyze_steady_state(p, opts);
    row.g2_0 = r.stats.g2_0;
    row.mean_n = r.stats.mean_n;
    row.p_n = r.stats.p_n;
    row.converged = r.converged;
    row.n_max = r.params.n_max;
  } catch (const std::exception& e) {
    row.error = e.what();
    row.converged = false;
    row.n_max = p.n_max;
  }
  row.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

/// Solves every grid point on a pool of workers. Row order is grid order;
/// per-point failures are stored in the row and never abort the sweep.
inline SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& opts = {}) {
  validate_grid(grid, opts.budget);
  SweepResult result;
  result.grid = grid;
  result.metadata.timestamp = utc_timestamp();
  result.metadata.params = grid.baseline;
  result.rows.resize(grid.size());

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      SweepRow row = evaluate_point(grid.point(k), opts.steady);
      row.axis1 = grid.axis1.values[k % grid.axis1.size()];
      if (grid.axis2) row.axis2 = grid.axis2->values[k / grid.axis1.size()];
      result.rows[k] = std::move(row);
    }
  };
  unsigned workers = opts.workers ? opts.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, grid.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Analysis of one-dimensional slices

struct Extremum {
  std::size_t index = 0;
  double position = 0.0;
  double g2_0 = 0.0;
};

/// Minimum of g2(0) along axis1. Values within a relative 1e-9 of the minimum
/// tie; ties go to the smallest |axis1|, then to the positive side.
inline std::optional<Extremum> argmin_g2(const std::vector<SweepRow>& slice) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : slice) {
    if (r.ok() && r.g2_0) best = std::min(best, *r.g2_0);
  }
  if (!std::isfinite(best)) return std::nullopt;
  std::optional<Extremum> pick;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    const auto& r = slice[i];
    if (!r.ok() || !r.g2_0 || *r.g2_0 > best * (1.0 + 1e-9)) continue;
    const bool better = !pick || std::abs(r.axis1) < std::abs(pick->position) ||
                        (std::abs(r.axis1) == std::abs(pick->position) && r.axis1 > pick->position);
    if (better) pick = Extremum{i, r.axis1, *r.g2_0};
  }
  return pick;
}

/// A maximal run of consecutive grid points with g2(0) < 1.
struct PoissonWindow {
  double start = 0.0;
  double stop = 0.0;
  Extremum minimum;
};

inline std::vector<PoissonWindow> sub_poissonian_windows(const std::vector<SweepRow>& slice) {
  std::vector<PoissonWindow> out;
  for (std::size_t i = 0; i < slice.size();) {
    if (!slice[i].sub_poissonian()) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < slice.size() && slice[j + 1].sub_poissonian()) ++j;
    std::vector<SweepRow> run(slice.begin() + static_cast<std::ptrdiff_t>(i), slice.begin() + static_cast<std::ptrdiff_t>(j + 1));
    auto m = *argmin_g2(run);
    m.index += i;
    out.push_back({slice[i].axis1, slice[j].axis1, m});
    i = j + 1;
  }
  return out;
}

struct ContourPoint {
  double axis1 = 0.0;
  double axis2 = 0.0;
};

/// g2(0) = 1 crossings: sign changes of log10 g2(0) between neighbouring grid
/// points along either axis, located by linear interpolation.
inline std::vector<ContourPoint> poisson_contour(const SweepResult& r) {
  std::vector<ContourPoint> out;
  const std::size_t n1 = r.grid.axis1.size();
  const std::size_t n2 = r.axis2_count();
  auto log_g2 = [&](std::size_t i1, std::size_t i2) -> std::optional<double> {
    const auto& row = r.rows[i2 * n1 + i1];
    if (!row.ok() || !row.g2_0 || !(*row.g2_0 > 0.0)) return std::nullopt;
    return std::log10(*row.g2_0);
  };
  auto add = [&](std::size_t a1, std::size_t a2, std::size_t b1, std::size_t b2) {
    const auto la = log_g2(a1, a2);
    const auto lb = log_g2(b1, b2);
    if (!la || !lb || (*la < 0.0) == (*lb < 0.0) || *la == *lb) return;
    const double t = *la / (*la - *lb);
    const auto& ra = r.rows[a2 * n1 + a1];
    const auto& rb = r.rows[b2 * n1 + b1];
    out.push_back({ra.axis1 + t * (rb.axis1 - ra.axis1), ra.axis2 + t * (rb.axis2 - ra.axis2)});
  };
  for (std::size_t i2 = 0; i2 < n2; ++i2) {
    for (std::size_t i1 = 0; i1 + 1 < n1; ++i1) add(i1, i2, i1 + 1, i2);
  }
  for (std::size_t i2 = 0; i2 + 1 < n2; ++i2) {
    for (std::size_t i1 = 0; i1 < n1; ++i1) add(i1, i2, i1, i2 + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Figure-level experiments

/// Drive detuning at which blockade is strongest: g for a single qubit, 0 for chains.
inline double prescribed_optimal_delta(const ChainParams& p) { return p.n_qubits == 1 ? p.g : 0.0; }

inline SweepResult map_detuning_drive(const ChainParams& params, const std::vector<double>& delta_over_g,
                                      const std::vector<double>& eta_over_gamma, const SweepOptions& opts = {}) {
  SweepGrid grid{{"delta_over_g", delta_over_g}, Axis{"eta_over_gamma", eta_over_gamma}, params};
  auto r = run_sweep(grid, opts);
  r.metadata.command = "map";
  return r;
}

struct OptimalPoint {
  double eta_over_gamma = 0.0;
  double delta_over_g = 0.0;  // prescribed optimum
  std::optional<double> g2_0;
  double mean_n = 0.0;
  bool converged = false;
  int n_max = 0;
  std::string error;
  std::optional<double> argmin_delta_over_g;  // cross-check over the detuning grid
  std::optional<double> argmin_g2_0;
};

/// g2(0) and <a^dag a> at the prescribed optimum for each drive strength, plus
/// the grid argmin over detuning when `delta_over_g` is non-empty.
inline std::vector<OptimalPoint> optimal_correlation_curve(const ChainParams& params,
                                                           const std::vector<double>& eta_over_gamma,
                                                           const std::vector<double>& delta_over_g = {},
                                                           const SweepOptions& opts = {}) {
  ChainParams at_optimum = params;
  at_optimum.delta = prescribed_optimal_delta(params);
  const auto fixed = run_sweep({{"eta_over_gamma", eta_over_gamma}, std::nullopt, at_optimum}, opts);

  std::optional<SweepResult> scan;
  if (!delta_over_g.empty()) {
    scan = run_sweep({{"delta_over_g", delta_over_g}, Axis{"eta_over_gamma", eta_over_gamma}, params}, opts);
  }
  std::vector<OptimalPoint> out;
  for (std::size_t k = 0; k < eta_over_gamma.size(); ++k) {
    const auto& row = fixed.rows[k];
    OptimalPoint pt{eta_over_gamma[k], at_optimum.delta / params.g, row.g2_0, row.mean_n, row.converged, row.n_max,
                    row.error, std::nullopt, std::nullopt};
    if (scan) {
      if (auto m = argmin_g2(scan->slice(k))) {
        pt.argmin_delta_over_g = m->position;
        pt.argmin_g2_0 = m->g2_0;
      }
    }
    out.push_back(std::move(pt));
  }
  return out;
}

struct DeviationRow {
  int n_qubits = 0;
  double eta_over_gamma = 0.0;
  double delta_over_g = 0.0;
  double mean_n = 0.0;
  std::vector<double> deviation;  // (P(n) - Poisson(n)) / Poisson(n), n = 0..3
  bool converged = false;
  bool flagged = false;  // mean photon number below the floor, or the solve failed
  std::string error;
};

inline constexpr int kDeviationMaxPhotons = 3;

/// Relative deviation of P(n) from Poisson statistics at each chain's prescribed optimum.
inline std::vector<DeviationRow> photon_deviation_panel(const std::vector<ChainParams>& params_list,
                                                        const std::vector<double>& eta_over_gamma,
                                                        const SweepOptions& opts = {}) {
  std::vector<DeviationRow> out;
  for (const auto& base : params_list) {
    ChainParams p = base;
    p.delta = prescribed_optimal_delta(base);
    if (p.n_max < kDeviationMaxPhotons) p.n_max = kDeviationMaxPhotons;
    const auto sweep = run_sweep({{"eta_over_gamma", eta_over_gamma}, std::nullopt, p}, opts);
    for (const auto& row : sweep.rows) {
      DeviationRow d{p.n_qubits, row.axis1, p.delta / p.g, row.mean_n, {}, row.converged, false, row.error};
      if (!row.ok() || row.mean_n < kMeanPhotonFloor) {
        d.flagged = true;
      } else {
        for (int n = 0; n <= kDeviationMaxPhotons; ++n) {
          const double poisson = poisson_probability(row.mean_n, n);
          d.deviation.push_back((row.p_n[static_cast<std::size_t>(n)] - poisson) / poisson);
        }
      }
      out.push_back(std::move(d));
    }
  }
  return out;
}

/// Map over detuning and cavity-coupling fluctuation g' = g + delta_g.
inline SweepResult robustness_coupling(const ChainParams& params, const std::vector<double>& delta_g_over_gamma,
                                       const std::vector<double>& delta_over_g, const SweepOptions& opts = {}) {
  if (delta_g_over_gamma.empty()) throw ParamError("robustness_coupling: empty delta_g grid");
  const double lowest = *std::min_element(delta_g_over_gamma.begin(), delta_g_over_gamma.end());
  if (!(params.g + lowest * params.gamma > 0.0)) throw ParamError("robustness_coupling: g + min(delta_g) must be > 0");
  auto r = run_sweep({{"delta_over_g", delta_over_g}, Axis{"delta_g_over_gamma", delta_g_over_gamma}, params}, opts);
  r.metadata.command = "robustness-g";
  return r;
}

/// Map over detuning and the first qubit's frequency shift.
inline SweepResult robustness_frequency(const ChainParams& params, const std::vector<double>& delta_omega1_over_gamma,
                                        const std::vector<double>& delta_over_g, const SweepOptions& opts = {}) {
  auto r = run_sweep({{"delta_over_g", delta_over_g}, Axis{"delta_omega1_over_gamma", delta_omega1_over_gamma}, params},
                     opts);
  r.metadata.command = "robustness-w1";
  return r;
}

/// Per axis2 value, the argmin over axis1 (empty when the slice has no valid g2).
inline std::vector<std::optional<Extremum>> argmin_per_slice(const SweepResult& r) {
  std::vector<std::optional<Extremum>> out;
  for (std::size_t k = 0; k < r.axis2_count(); ++k) out.push_back(argmin_g2(r.slice(k)));
  return out;
}

/// Column of rows at the axis1 value closest to `axis1_value`, one per axis2 value.
inline std::vector<SweepRow> column_at(const SweepResult& r, double axis1_value) {
  const auto& v = r.grid.axis1.values;
  const auto it = std::min_element(v.begin(), v.end(), [&](double a, double b) {
    return std::abs(a - axis1_value) < std::abs(b - axis1_value);
  });
  const auto i1 = static_cast<std::size_t>(it - v.begin());
  std::vector<SweepRow> out;
  for (std::size_t k = 0; k < r.axis2_count(); ++k) out.push_back(r.rows[k * v.size() + i1]);
  return out;
}

/// max_k |<n>(axis2_k) - <n>(axis2 = 0)| / <n>(axis2 = 0) along the detuning column
/// at `delta_over_g` (defaults to resonance).
inline double mean_n_flatness(const SweepResult& r, double delta_over_g = 0.0) {
  if (!r.grid.axis2) throw ParamError("mean_n_flatness: needs a two-axis sweep");
  const auto col = column_at(r, delta_over_g);
  const auto& a2 = r.grid.axis2->values;
  const auto zero = static_cast<std::size_t>(
      std::min_element(a2.begin(), a2.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) - a2.begin());
  const double ref = col[zero].mean_n;
  double worst = 0.0;
  for (const auto& row : col) {
    if (!row.ok()) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(row.mean_n - ref) / ref);
  }
  return worst;
}

}  // namespace sshpb
