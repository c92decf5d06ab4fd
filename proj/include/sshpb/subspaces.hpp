#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sshpb/model.hpp"
#include "sshpb/operators.hpp"

namespace sshpb {

struct BasisState {
  int fock = 0;
  std::uint32_t bits = 0;
  Index global = 0;  // index in the composite space
};

/// "|g e g g, 1⟩": qubit 1 first, then the photon number.
inline std::string state_label(int n_qubits, int fock, std::uint32_t bits) {
  std::string s = "|";
  for (int i = 1; i <= n_qubits; ++i) {
    if (i > 1) s += ' ';
    s += (bits & (std::uint32_t{1} << (n_qubits - i))) ? 'e' : 'g';
  }
  return s + ", " + std::to_string(fock) + "⟩";
}

/// Composite basis states with a fixed total excitation number.
///
/// Canonical order: descending photon number, then lexicographic in the qubit
/// label with e before g. The single-excitation block is then tridiagonal
/// (photon, qubit 1, qubit 2, ...).
struct LabeledBasis {
  int n_exc = 0;
  int n_qubits = 0;
  std::vector<BasisState> states;
  std::vector<std::string> labels;

  std::size_t size() const { return states.size(); }

  std::optional<std::size_t> find(int fock, std::uint32_t bits) const {
    for (std::size_t k = 0; k < states.size(); ++k) {
      if (states[k].fock == fock && states[k].bits == bits) return k;
    }
    return std::nullopt;
  }
};

inline LabeledBasis enumerate_basis(const HilbertSpace& space, int n_exc) {
  if (n_exc < 0) throw DimensionError("enumerate_basis: n_exc must be >= 0");
  LabeledBasis basis{n_exc, space.n_qubits, {}, {}};
  const int top = std::min(n_exc, space.n_max);
  for (int fock = top; fock >= 0 && n_exc - fock <= space.n_qubits; --fock) {
    const int ones = n_exc - fock;
    for (Index b = space.qubit_dim() - 1; b >= 0; --b) {
      const auto bits = static_cast<std::uint32_t>(b);
      if (std::popcount(bits) != ones) continue;
      basis.states.push_back({fock, bits, space.index(fock, bits)});
      basis.labels.push_back(state_label(space.n_qubits, fock, bits));
    }
  }
  return basis;
}

/// Undriven Hamiltonian restricted to one excitation sector, with its eigensystem.
struct SubspaceSpectrum {
  LabeledBasis basis;
  DenseMatrix hamiltonian_block;
  Eigen::VectorXd eigenvalues;  // ascending
  DenseMatrix eigenvectors;     // columns aligned with `eigenvalues`
};

/// Requires a number-conserving Hamiltonian (eta = 0) and n_exc <= n_max.
inline SubspaceSpectrum project_subspace(const SparseOperator& h, const HilbertSpace& space, int n_exc) {
  if (h.dim() != space.dim()) throw DimensionError("project_subspace: Hamiltonian does not match the space");
  if (n_exc > space.n_max) {
    throw DimensionError("project_subspace: n_exc=" + std::to_string(n_exc) + " exceeds n_max=" +
                         std::to_string(space.n_max));
  }
  auto excitation = [&](Index k) { return space.fock_of(k) + std::popcount(space.bits_of(k)); };
  for (Index c = 0; c < h.matrix().outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(h.matrix(), c); it; ++it) {
      if (excitation(it.row()) != excitation(c) && std::abs(it.value()) > 1e-12) {
        throw ParamError("project_subspace: Hamiltonian couples excitation sectors (drive must be zero)");
      }
    }
  }

  SubspaceSpectrum out;
  out.basis = enumerate_basis(space, n_exc);
  const auto n = static_cast<Index>(out.basis.size());
  out.hamiltonian_block.resize(n, n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < n; ++c) {
      out.hamiltonian_block(r, c) = h.coeff(out.basis.states[r].global, out.basis.states[c].global);
    }
  }
  if (n == 0) {
    out.eigenvectors.resize(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(out.hamiltonian_block);
  if (es.info() != Eigen::Success) throw SolverError("project_subspace: eigensolver failed");
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  return out;
}

struct QllEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

/// Quantum-level lattice: basis states as sites, |H_ab| as bond weights.
///
/// `coordinates[k]` places a state on an n_exc-dimensional grid: the sorted
/// indices of excited qubits, padded with zeros for photons.
struct QllGraph {
  LabeledBasis nodes;
  std::vector<QllEdge> edges;
  std::vector<std::vector<int>> coordinates;

  std::size_t degree(std::size_t node) const {
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [&](const QllEdge& e) { return e.a == node || e.b == node; }));
  }
  std::vector<QllEdge> edges_of(std::size_t node) const {
    std::vector<QllEdge> out;
    for (const auto& e : edges) {
      if (e.a == node || e.b == node) out.push_back(e);
    }
    return out;
  }
};

inline QllGraph qll_graph(const SubspaceSpectrum& spectrum, const ChainParams& params) {
  QllGraph graph;
  graph.nodes = spectrum.basis;
  const double cutoff = 1e-12 * std::max({params.effective_g(), params.j1, params.j2, 1.0});
  const auto n = spectrum.hamiltonian_block.rows();
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      const double w = std::abs(spectrum.hamiltonian_block(a, b));
      if (w > cutoff) graph.edges.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b), w});
    }
  }
  const int nq = spectrum.basis.n_qubits;
  for (const auto& s : spectrum.basis.states) {
    std::vector<int> coord(static_cast<std::size_t>(s.fock), 0);
    for (int i = 1; i <= nq; ++i) {
      if (s.bits & (std::uint32_t{1} << (nq - i))) coord.push_back(i);
    }
    graph.coordinates.push_back(std::move(coord));
  }
  return graph;
}

struct ZeroMode {
  double energy = 0.0;  // Rayleigh quotient of `vector`
  DenseVector vector;
};

/// 1e-8 * max(g, J1): scales with the spectral width.
inline double default_zero_tolerance(const ChainParams& p) { return 1e-8 * std::max(p.effective_g(), p.j1); }

/// Eigenpairs with |E| < tol.
///
/// A degenerate zero eigenspace has no preferred basis; it is reported as the
/// Gram-Schmidt orthonormalisation of the projected canonical basis vectors (in
/// basis order), each with its first nonzero component made real-positive.
inline std::vector<ZeroMode> zero_modes(const SubspaceSpectrum& spectrum, double tol) {
  if (!(tol > 0.0)) throw ParamError("zero_modes: tolerance must be > 0");
  std::vector<Index> cols;
  for (Index k = 0; k < spectrum.eigenvalues.size(); ++k) {
    if (std::abs(spectrum.eigenvalues(k)) < tol) cols.push_back(k);
  }
  if (cols.empty()) return {};

  const Index n = spectrum.eigenvectors.rows();
  DenseMatrix z(n, static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) z.col(static_cast<Index>(k)) = spectrum.eigenvectors.col(cols[k]);

  std::vector<DenseVector> ortho;
  for (Index j = 0; j < n && ortho.size() < cols.size(); ++j) {
    DenseVector v = z * z.row(j).adjoint();  // projector applied to e_j
    for (const auto& u : ortho) v -= u * u.dot(v);
    for (const auto& u : ortho) v -= u * u.dot(v);
    const double norm = v.norm();
    if (norm < 1e-6) continue;
    v /= norm;
    for (Index k = 0; k < n; ++k) {
      if (std::abs(v(k)) > 1e-12) {
        v *= std::conj(v(k)) / std::abs(v(k));
        break;
      }
    }
    ortho.push_back(std::move(v));
  }

  std::vector<ZeroMode> out;
  for (auto& v : ortho) {
    const double e = v.dot(spectrum.hamiltonian_block * v).real();
    out.push_back({e, std::move(v)});
  }
  return out;
}

struct LocalizationReport {
  int n_exc = 0;
  Complex single_photon_amplitude{0.0, 0.0};  // on |g..g, 1⟩ (n_exc = 1)
  double max_even_site_amplitude = 0.0;       // max |C_2k| along the chain (n_exc = 1)
  double two_photon_weight = 0.0;             // on |g..g, 2⟩ (n_exc = 2)
  double two_qubit_weight = 0.0;              // on photon-free states (n_exc = 2)
  double inverse_participation_ratio = 0.0;
};

/// Chain sites are numbered 1 (photon), 2 (qubit 1), ..., N+1 (qubit N).
inline LocalizationReport edge_localization(const DenseVector& mode, const LabeledBasis& basis) {
  if (static_cast<std::size_t>(mode.size()) != basis.size()) throw DimensionError("edge_localization: size mismatch");
  LocalizationReport r;
  r.n_exc = basis.n_exc;
  const double norm2 = mode.squaredNorm();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const Complex c = mode(static_cast<Index>(k));
    const double p = std::norm(c) / norm2;
    r.inverse_participation_ratio += p * p;
    const auto& s = basis.states[k];
    if (basis.n_exc == 1) {
      if (s.fock == 1) {
        r.single_photon_amplitude = c / std::sqrt(norm2);
      } else {
        const int qubit = basis.n_qubits + 1 - std::bit_width(s.bits);  // position of the single e
        const int site = qubit + 1;
        if (site % 2 == 0) r.max_even_site_amplitude = std::max(r.max_even_site_amplitude, std::abs(c) / std::sqrt(norm2));
      }
    } else if (basis.n_exc == 2) {
      if (s.fock == 2) r.two_photon_weight += p;
      if (s.fock == 0) r.two_qubit_weight += p;
    }
  }
  return r;
}

/// Exact single-excitation zero mode of the chain photon-q1-q2-...-qN with bonds
/// (g, J1, J2, J1, ...): supported on odd sites, psi_{2k+1} = -(t_{2k-1}/t_{2k}) psi_{2k-1}.
inline Eigen::VectorXd ssh_zero_mode_oracle(const ChainParams& p) {
  validate(p);
  if (p.n_qubits < 2 || p.n_qubits % 2 != 0) throw ParamError("ssh_zero_mode_oracle: needs an even chain");
  if (p.delta != 0.0 || p.delta_omega1 != 0.0) throw ParamError("ssh_zero_mode_oracle: requires zero detuning");
  if (p.j1 == 0.0) throw ParamError("ssh_zero_mode_oracle: requires j1 > 0");

  const int sites = p.n_qubits + 1;
  auto bond = [&](int k) {  // bond between site k and k+1, 1-based
    if (k == 1) return p.effective_g();
    return (k % 2 == 0) ? p.j1 : p.j2;
  };
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(sites);
  psi(0) = 1.0;
  for (int s = 3; s <= sites; s += 2) psi(s - 1) = -(bond(s - 2) / bond(s - 1)) * psi(s - 3);
  return psi / psi.norm();
}

}  // namespace sshpb
