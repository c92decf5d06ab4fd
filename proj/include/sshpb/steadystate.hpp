#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/IterativeSolvers>

#include "sshpb/model.hpp"
#include "sshpb/operators.hpp"

namespace sshpb {

/// Vectorised master-equation generator, column-stacking: vec(A rho B) = (B^T (x) A) vec(rho).
///
/// With K = -i H - 1/2 sum_k r_k C_k^dag C_k (= -i H_eff),
///   L = I (x) K + conj(K) (x) I + sum_k r_k conj(C_k) (x) C_k.
struct Liouvillian {
  Index hilbert_dim = 0;
  SparseMatrix matrix;
  DenseMatrix no_jump_generator;  // K
  std::vector<double> rates;

  Index dim() const { return matrix.rows(); }
};

inline Liouvillian build_liouvillian(const SparseOperator& h, std::span<const CollapseChannel> collapse) {
  const Index d = h.dim();
  SparseMatrix k = Complex{0.0, -1.0} * h.matrix();
  Liouvillian out;
  out.hilbert_dim = d;
  for (const auto& c : collapse) {
    if (c.op.dim() != d) throw DimensionError("build_liouvillian: collapse operator dimension mismatch");
    const SparseMatrix cdc = c.op.matrix().adjoint() * c.op.matrix();
    k -= Complex{0.5 * c.rate, 0.0} * cdc;
    out.rates.push_back(c.rate);
  }
  k.makeCompressed();
  const SparseMatrix k_conj = k.conjugate();
  std::vector<SparseMatrix> c_conj;
  for (const auto& c : collapse) c_conj.emplace_back(c.op.matrix().conjugate());

  // Column (p, q) of L, i.e. vec index q*d + p, collects
  //   K(r, p)                  at row q*d + r
  //   conj(K)(s, q)            at row s*d + p
  //   rate conj(C)(s, q) C(r, p) at row s*d + r
  const Index n = d * d;
  using StorageIndex = SparseMatrix::StorageIndex;
  std::vector<StorageIndex> outer(static_cast<std::size_t>(n + 1), 0);
  std::vector<StorageIndex> inner;
  std::vector<Complex> values;
  inner.reserve(static_cast<std::size_t>(n * 8));
  values.reserve(static_cast<std::size_t>(n * 8));
  std::vector<std::pair<Index, Complex>> col;
  for (Index q = 0; q < d; ++q) {
    for (Index p = 0; p < d; ++p) {
      col.clear();
      for (SparseMatrix::InnerIterator it(k, p); it; ++it) col.emplace_back(q * d + it.row(), it.value());
      for (SparseMatrix::InnerIterator it(k_conj, q); it; ++it) col.emplace_back(it.row() * d + p, it.value());
      for (std::size_t j = 0; j < collapse.size(); ++j) {
        const double rate = collapse[j].rate;
        for (SparseMatrix::InnerIterator cs(c_conj[j], q); cs; ++cs) {
          for (SparseMatrix::InnerIterator cr(collapse[j].op.matrix(), p); cr; ++cr) {
            col.emplace_back(cs.row() * d + cr.row(), rate * cs.value() * cr.value());
          }
        }
      }
      std::sort(col.begin(), col.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      for (std::size_t i = 0; i < col.size();) {
        const Index row = col[i].first;
        Complex v{0.0, 0.0};
        for (; i < col.size() && col[i].first == row; ++i) v += col[i].second;
        if (v != Complex{0.0, 0.0}) {
          inner.push_back(static_cast<StorageIndex>(row));
          values.push_back(v);
        }
      }
      outer[static_cast<std::size_t>(q * d + p + 1)] = static_cast<StorageIndex>(inner.size());
    }
  }
  SparseMatrix l(n, n);
  l.resizeNonZeros(static_cast<Index>(inner.size()));
  std::copy(outer.begin(), outer.end(), l.outerIndexPtr());
  std::copy(inner.begin(), inner.end(), l.innerIndexPtr());
  std::copy(values.begin(), values.end(), l.valuePtr());
  out.matrix = std::move(l);
  out.no_jump_generator = DenseMatrix(k);
  return out;
}

struct DensityTolerances {
  double hermitian = 1e-10;
  double trace = 1e-10;
  double min_eigenvalue = -1e-8;
};

/// Hermitian, unit-trace, positive-semidefinite state. The checked constructor
/// throws InvariantError on violation.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  explicit DensityMatrix(DenseMatrix m, const DensityTolerances& tol = {}) : m_(std::move(m)) {
    if (auto why = violation(tol)) throw InvariantError("DensityMatrix: " + *why);
  }

  static DensityMatrix unchecked(DenseMatrix m) {
    DensityMatrix r;
    r.m_ = std::move(m);
    return r;
  }

  static DensityMatrix pure(const DenseVector& psi) {
    const DenseVector n = psi / psi.norm();
    return DensityMatrix(n * n.adjoint());
  }

  /// |g..g, 0><g..g, 0|.
  static DensityMatrix ground(const HilbertSpace& space) {
    DenseMatrix m = DenseMatrix::Zero(space.dim(), space.dim());
    m(0, 0) = 1.0;
    return DensityMatrix(std::move(m));
  }

  static DensityMatrix from_vectorized(const DenseVector& v, Index d, const DensityTolerances& tol = {}) {
    if (v.size() != d * d) throw DimensionError("DensityMatrix: vectorised size mismatch");
    return DensityMatrix(DenseMatrix(Eigen::Map<const DenseMatrix>(v.data(), d, d)), tol);
  }

  Index dim() const { return m_.rows(); }
  const DenseMatrix& matrix() const { return m_; }
  Complex trace() const { return m_.trace(); }
  DenseVector vectorized() const { return Eigen::Map<const DenseVector>(m_.data(), m_.size()); }

  double hermiticity_error() const { return m_.size() ? (m_ - m_.adjoint()).cwiseAbs().maxCoeff() : 0.0; }

  double min_eigenvalue() const {
    if (m_.size() == 0) return 0.0;
    const DenseMatrix herm = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  std::optional<std::string> violation(const DensityTolerances& tol = {}) const {
    if (m_.rows() != m_.cols()) return "matrix is not square";
    if (m_.size() == 0) return "empty matrix";
    if (!m_.allFinite()) return "non-finite entries";
    if (double h = hermiticity_error(); h > tol.hermitian) return "not Hermitian (max deviation " + std::to_string(h) + ")";
    if (double t = std::abs(trace() - Complex{1.0, 0.0}); t > tol.trace) return "trace differs from 1 by " + std::to_string(t);
    if (double e = min_eigenvalue(); e < tol.min_eigenvalue) return "negative eigenvalue " + std::to_string(e);
    return std::nullopt;
  }

 private:
  DenseMatrix m_;
};

inline Complex expectation(const SparseOperator& a, const DensityMatrix& rho) { return expectation(a, rho.matrix()); }

namespace detail {

/// Solves K X + X K^dag - shift X = Y through the Schur form K = Q T Q^dag
/// (Bartels-Stewart). Used as the GMRES preconditioner: it inverts the
/// Liouvillian without the jump terms.
class NoJumpPreconditioner {
 public:
  NoJumpPreconditioner() = default;

  template <typename Mat>
  NoJumpPreconditioner& analyzePattern(const Mat&) { return *this; }
  template <typename Mat>
  NoJumpPreconditioner& factorize(const Mat&) { return *this; }
  template <typename Mat>
  NoJumpPreconditioner& compute(const Mat&) { return *this; }
  Eigen::ComputationInfo info() const { return ok_ ? Eigen::Success : Eigen::NumericalIssue; }

  void setup(const DenseMatrix& k, double shift) {
    Eigen::ComplexSchur<DenseMatrix> schur(k);
    ok_ = schur.info() == Eigen::Success;
    q_ = schur.matrixU();
    t_ = schur.matrixT();
    shift_ = shift;
  }

  template <typename Rhs>
  DenseVector solve(const Rhs& y) const {
    const Index d = t_.rows();
    const DenseVector yv = y;
    const DenseMatrix c = q_.adjoint() * Eigen::Map<const DenseMatrix>(yv.data(), d, d) * q_;
    // T X + X T^dag - shift X = C; T^dag is lower triangular, so columns resolve from the right.
    DenseMatrix x(d, d);
    DenseMatrix tj = t_;
    for (Index j = d - 1; j >= 0; --j) {
      DenseVector rhs = c.col(j);
      if (j + 1 < d) rhs.noalias() -= x.rightCols(d - j - 1) * t_.row(j).tail(d - j - 1).adjoint();
      tj.diagonal() = t_.diagonal().array() + (std::conj(t_(j, j)) - shift_);
      tj.triangularView<Eigen::Upper>().solveInPlace(rhs);
      x.col(j) = rhs;
    }
    const DenseMatrix r = q_ * x * q_.adjoint();
    return Eigen::Map<const DenseVector>(r.data(), r.size());
  }

 private:
  DenseMatrix q_;
  DenseMatrix t_;
  double shift_ = 0.0;
  bool ok_ = false;
};

/// L with its first row replaced by the trace functional.
inline SparseMatrix trace_constrained_system(const Liouvillian& l) {
  const Index d = l.hilbert_dim;
  SparseMatrix m = l.matrix;
  m.prune([](Index row, Index, const Complex&) { return row != 0; });
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) t.emplace_back(0, i * d + i, Complex{1.0, 0.0});
  SparseMatrix tr(m.rows(), m.cols());
  tr.setFromTriplets(t.begin(), t.end());
  m += tr;
  m.makeCompressed();
  return m;
}

}  // namespace detail

enum class SolverKind {
  Krylov,  // GMRES preconditioned by the no-jump Sylvester inverse
  Direct,  // sparse LU
};

struct SolverOptions {
  SolverKind kind = SolverKind::Krylov;
  /// Accepted residual ||M x - e_0||_2 relative to max(1, max|L_ij|).
  double residual_tolerance = 1e-12;
  int max_iterations = 400;
  int restart = 60;
  DensityTolerances density{};
};

/// Unique steady state of L: solves L vec(rho) = 0 with trace(rho) = 1 by
/// replacing the first equation with the trace condition.
inline DensityMatrix steady_state(const Liouvillian& l, const SolverOptions& opts = {}) {
  const Index d = l.hilbert_dim;
  if (l.dim() != d * d || d == 0) throw DimensionError("steady_state: malformed Liouvillian");
  if (l.rates.empty() || std::any_of(l.rates.begin(), l.rates.end(), [](double r) { return !(r > 0.0); })) {
    throw SolverError("steady_state: singular system, every dissipation rate must be positive for a unique steady state");
  }

  const SparseMatrix m = detail::trace_constrained_system(l);
  DenseVector b = DenseVector::Zero(m.rows());
  b(0) = 1.0;

  double scale = 1.0;
  for (Index k = 0; k < l.matrix.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(l.matrix, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  const double target = opts.residual_tolerance * scale;

  DenseVector x;
  if (opts.kind == SolverKind::Direct) {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) throw SolverError("steady_state: sparse LU failed (" + lu.lastErrorMessage() + ")");
    x = lu.solve(b);
  } else {
    Eigen::GMRES<SparseMatrix, detail::NoJumpPreconditioner> gmres;
    gmres.set_restart(opts.restart);
    gmres.setMaxIterations(opts.max_iterations);
    gmres.setTolerance(1e-14);
    gmres.compute(m);
    const double min_rate = *std::min_element(l.rates.begin(), l.rates.end());
    gmres.preconditioner().setup(l.no_jump_generator, 1e-3 * min_rate);
    if (gmres.preconditioner().info() != Eigen::Success) throw SolverError("steady_state: Schur decomposition failed");
    x = gmres.solve(b);
    // A few warm restarts in case the preconditioned residual stalled above target.
    for (int pass = 0; pass < 3 && (m * x - b).norm() > target; ++pass) x = gmres.solveWithGuess(b, x);
  }
  if (!x.allFinite()) throw SolverError("steady_state: solution is not finite");
  if (double res = (m * x - b).norm(); !(res <= target)) {
    throw SolverError("steady_state: residual " + std::to_string(res) + " above tolerance " + std::to_string(target));
  }

  DenseMatrix rho = Eigen::Map<const DenseMatrix>(x.data(), d, d);
  const DensityMatrix raw = DensityMatrix::unchecked(rho);
  if (double h = raw.hermiticity_error(); h > opts.density.hermitian) {
    throw InvariantError("steady_state: solution not Hermitian (max deviation " + std::to_string(h) + ")");
  }
  DenseMatrix herm = 0.5 * (rho + rho.adjoint());
  return DensityMatrix(std::move(herm), opts.density);
}

struct EvolveOptions {
  double abs_tolerance = 1e-12;
  double rel_tolerance = 1e-10;
  double min_step = 1e-12;
  long max_steps = 10'000'000;
};

/// rho(t_final) for d vec(rho)/dt = L vec(rho), adaptive Dormand-Prince 5(4).
/// `dt` is the initial and the largest step; keep it inside the stability region.
inline DensityMatrix evolve(const DensityMatrix& rho0, const Liouvillian& l, double t_final, double dt,
                            const EvolveOptions& opts = {}) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<Complex>;
  const Index d = l.hilbert_dim;
  if (rho0.dim() != d) throw DimensionError("evolve: state dimension does not match the Liouvillian");
  if (!(t_final >= 0.0) || !(dt > 0.0)) throw SolverError("evolve: need t_final >= 0 and dt > 0");

  const DenseVector v0 = rho0.vectorized();
  State x(v0.data(), v0.data() + v0.size());
  const auto rhs = [&l](const State& in, State& out, double) {
    out.resize(in.size());
    Eigen::Map<DenseVector>(out.data(), static_cast<Index>(out.size())).noalias() =
        l.matrix * Eigen::Map<const DenseVector>(in.data(), static_cast<Index>(in.size()));
  };

  auto stepper = odeint::make_controlled(opts.abs_tolerance, opts.rel_tolerance, odeint::runge_kutta_dopri5<State>());
  double t = 0.0;
  double h = std::min(dt, t_final);
  long steps = 0;
  while (t < t_final) {
    h = std::min(h, dt);
    if (t + h > t_final) h = t_final - t;
    const double t_before = t;
    if (stepper.try_step(rhs, x, t, h) == odeint::fail) {
      if (h < opts.min_step) throw SolverError("evolve: step-size underflow at t=" + std::to_string(t) + " (stiff system)");
      continue;
    }
    if (t == t_before) throw SolverError("evolve: no progress at t=" + std::to_string(t));
    if (++steps > opts.max_steps) throw SolverError("evolve: step budget exhausted");
    if (t_final - t < 1e-14 * std::max(1.0, t_final)) break;
  }

  const DenseMatrix rho = Eigen::Map<const DenseMatrix>(x.data(), d, d);
  return DensityMatrix(rho, DensityTolerances{1e-8, 1e-8, -1e-8});
}

/// Photon statistics of the cavity field. `g2_0` is empty when <a^dag a> < 1e-12.
struct PhotonStatistics {
  std::optional<double> g2_0;
  double mean_n = 0.0;
  std::vector<double> p_n;              // n = 0..n_max
  std::vector<double> poisson_deviation;  // (P(n) - Poisson(n)) / Poisson(n); NaN where Poisson(n) underflows to 0
};

inline constexpr double kMeanPhotonFloor = 1e-12;

inline double poisson_probability(double mean, int n) {
  if (mean == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(n * std::log(mean) - mean - std::lgamma(n + 1.0));
}

inline PhotonStatistics photon_statistics(const DensityMatrix& rho, const HilbertSpace& space) {
  if (rho.dim() != space.dim()) throw DimensionError("photon_statistics: state does not match the space");
  const auto a = embed(fock_annihilation(space.n_max), CavitySlot{}, space);
  const auto ad = a.dagger();
  PhotonStatistics s;
  s.mean_n = expectation(ad * a, rho).real();
  const double second = expectation(ad * ad * a * a, rho).real();

  s.p_n.assign(static_cast<std::size_t>(space.n_max + 1), 0.0);
  for (Index k = 0; k < space.dim(); ++k) s.p_n[static_cast<std::size_t>(space.fock_of(k))] += rho.matrix()(k, k).real();
  double total = 0.0;
  for (double p : s.p_n) total += p;
  if (std::abs(total - 1.0) > 1e-8) throw InvariantError("photon_statistics: P(n) does not sum to 1");

  if (s.mean_n >= kMeanPhotonFloor) s.g2_0 = std::max(0.0, second) / (s.mean_n * s.mean_n);
  for (int n = 0; n <= space.n_max; ++n) {
    const double poisson = poisson_probability(std::max(0.0, s.mean_n), n);
    s.poisson_deviation.push_back(poisson > 0.0 ? (s.p_n[static_cast<std::size_t>(n)] - poisson) / poisson
                                                : std::numeric_limits<double>::quiet_NaN());
  }
  return s;
}

struct SteadyStateOptions {
  SolverOptions solver{};
  bool check_truncation = true;
  double truncation_rtol = 1e-3;
  /// How far n_max may be raised beyond the requested value when the check fails.
  int max_extra_photons = 4;
};

struct SteadyStateReport {
  ChainParams params;  // n_max is the truncation actually used
  DensityMatrix rho;
  PhotonStatistics stats;
  bool converged = true;  // observables stable under n_max -> n_max + 1
  double g2_change = 0.0;
  double mean_n_change = 0.0;
};

inline DensityMatrix solve_steady_state(const ChainParams& p, const SolverOptions& opts = {}) {
  const auto h = build_hamiltonian(p);
  const auto c = build_collapse_operators(p);
  return steady_state(build_liouvillian(h, c), opts);
}

/// Steady state and photon statistics for one parameter point.
///
/// Truncation check: the point is re-solved at n_max + 1 and counts as converged
/// when g2(0) and <a^dag a> change by less than truncation_rtol (relative). On
/// failure n_max grows by half its value per step, up to n_max + max_extra_photons.
inline SteadyStateReport analyze_steady_state(const ChainParams& p, const SteadyStateOptions& opts = {}) {
  validate(p);
  if (p.n_max < 2) throw ParamError("n_max must be >= 2 for photon correlations");
  SteadyStateReport r;
  r.params = p;
  r.rho = solve_steady_state(p, opts.solver);
  r.stats = photon_statistics(r.rho, p.space());
  if (!opts.check_truncation) return r;

  auto rel = [](double a, double b) {
    const double m = std::max(std::abs(a), std::abs(b));
    return m < kMeanPhotonFloor ? std::abs(a - b) : std::abs(a - b) / m;
  };
  const int cap = p.n_max + std::max(0, opts.max_extra_photons);
  for (;;) {
    ChainParams bigger = r.params;
    bigger.n_max += 1;
    DensityMatrix rho2 = solve_steady_state(bigger, opts.solver);
    PhotonStatistics s2 = photon_statistics(rho2, bigger.space());

    r.mean_n_change = rel(r.stats.mean_n, s2.mean_n);
    if (r.stats.g2_0.has_value() != s2.g2_0.has_value()) {
      r.g2_change = std::numeric_limits<double>::infinity();
    } else {
      r.g2_change = r.stats.g2_0 ? rel(*r.stats.g2_0, *s2.g2_0) : 0.0;
    }
    r.converged = r.mean_n_change < opts.truncation_rtol && r.g2_change < opts.truncation_rtol;
    if (r.converged || r.params.n_max >= cap) return r;
    const int next = std::min(cap, r.params.n_max + std::max(1, r.params.n_max / 2));
    if (next == bigger.n_max) {
      r.params = bigger;
      r.rho = std::move(rho2);
      r.stats = std::move(s2);
    } else {
      r.params.n_max = next;
      r.rho = solve_steady_state(r.params, opts.solver);
      r.stats = photon_statistics(r.rho, r.params.space());
    }
  }
}

}  // namespace sshpb
