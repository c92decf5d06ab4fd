#pragma once

#include <bit>
#include <cmath>
#include <string>
#include <vector>

#include "sshpb/errors.hpp"
#include "sshpb/operators.hpp"

namespace sshpb {

/// Physical parameters of the driven, dissipative cavity + SSH qubit chain.
///
/// All frequencies and rates share one unit (the CLI uses the qubit decay rate).
/// `delta` is the common detuning of cavity and qubits from the drive.
struct ChainParams {
  int n_qubits = 4;
  double g = 10.0;
  double j1 = std::sqrt(2.0) * 10.0;
  double j2 = 2.0;
  double delta = 0.0;
  double eta = 0.5;
  double kappa = 0.5;
  double gamma = 1.0;
  int n_max = 5;  // >= 2 whenever photon correlations are requested
  double delta_g = 0.0;
  double delta_omega1 = 0.0;

  /// g = 10, kappa = 0.5, J1 = sqrt(2) g, J2 = 0.2 g, in units of gamma = 1.
  static ChainParams defaults(int n_qubits) {
    ChainParams p;
    p.n_qubits = n_qubits;
    return p;
  }

  double effective_g() const { return g + delta_g; }
  HilbertSpace space() const { return HilbertSpace(n_max, n_qubits); }

  friend bool operator==(const ChainParams&, const ChainParams&) = default;
};

enum class RegimeCheck {
  Skip,     // hard constraints only
  Warn,     // regime violations are reported, not thrown
  Enforce,  // regime violations throw ParamError
};

/// Violations of g < J1, J2 < J1 and J1 <= sqrt(2) g (chains with >= 2 qubits only).
inline std::vector<std::string> regime_violations(const ChainParams& p) {
  std::vector<std::string> out;
  if (p.n_qubits < 2) return out;
  const double g = p.effective_g();
  const double slack = 1e-12 * std::max({g, p.j1, p.j2, 1.0});
  if (!(g < p.j1)) out.push_back("regime: expected g < j1 (g=" + std::to_string(g) + ", j1=" + std::to_string(p.j1) + ")");
  if (!(p.j2 < p.j1)) out.push_back("regime: expected j2 < j1 (j2=" + std::to_string(p.j2) + ", j1=" + std::to_string(p.j1) + ")");
  if (p.j1 > std::sqrt(2.0) * g + slack) {
    out.push_back("regime: expected j1 <= sqrt(2) g (j1=" + std::to_string(p.j1) + ", sqrt(2) g=" +
                  std::to_string(std::sqrt(2.0) * g) + ")");
  }
  return out;
}

/// Throws ParamError on hard violations; returns regime warnings according to `mode`.
inline std::vector<std::string> validate(const ChainParams& p, RegimeCheck mode = RegimeCheck::Skip) {
  auto fail = [](const std::string& msg) { throw ParamError(msg); };
  for (double v : {p.g, p.j1, p.j2, p.delta, p.eta, p.kappa, p.gamma, p.delta_g, p.delta_omega1}) {
    if (!std::isfinite(v)) fail("parameters must be finite");
  }
  if (p.n_qubits < 1 || (p.n_qubits > 1 && p.n_qubits % 2 != 0)) fail("n_qubits must be 1 or even");
  if (p.n_qubits > 12) fail("n_qubits must be <= 12");
  if (!(p.g > 0.0)) fail("g must be > 0");
  if (p.j1 < 0.0) fail("j1 must be >= 0");
  if (p.j2 < 0.0) fail("j2 must be >= 0");
  if (p.eta < 0.0) fail("eta must be >= 0");
  if (!(p.kappa > 0.0)) fail("kappa must be > 0");
  if (!(p.gamma > 0.0)) fail("gamma must be > 0");
  if (p.n_max < 1) fail("n_max must be >= 1");
  if (!(p.effective_g() > 0.0)) fail("g + delta_g must be > 0");

  if (mode == RegimeCheck::Skip) return {};
  auto warnings = regime_violations(p);
  if (mode == RegimeCheck::Enforce && !warnings.empty()) fail(warnings.front());
  return warnings;
}

namespace detail {

struct ChainOperators {
  SparseOperator a;
  std::vector<SparseOperator> lowering;  // lowering[i - 1] acts on qubit i
};

inline ChainOperators chain_operators(const HilbertSpace& space) {
  ChainOperators ops{embed(fock_annihilation(space.n_max), CavitySlot{}, space), {}};
  const auto sm = qubit_lowering();
  for (int i = 1; i <= space.n_qubits; ++i) ops.lowering.push_back(embed(sm, QubitSlot{i}, space));
  return ops;
}

}  // namespace detail

/// Rotating-frame Hamiltonian of the driven chain.
///
/// Qubit i couples to i+1 with J1 when i is odd (intracell) and J2 when i is even
/// (intercell). The cavity couples to qubit 1 with g + delta_g, and qubit 1 is
/// detuned by delta + delta_omega1.
inline SparseOperator build_hamiltonian(const ChainParams& p) {
  validate(p);
  const HilbertSpace space = p.space();
  const auto ops = detail::chain_operators(space);
  const SparseOperator ad = ops.a.dagger();

  SparseOperator h = p.delta * (ad * ops.a);
  for (int i = 1; i <= p.n_qubits; ++i) {
    const auto& s = ops.lowering[i - 1];
    const double detuning = p.delta + (i == 1 ? p.delta_omega1 : 0.0);
    h = h + detuning * (s.dagger() * s);
  }
  for (int i = 1; i < p.n_qubits; ++i) {
    const double hop = (i % 2 == 1) ? p.j1 : p.j2;
    const auto& s1 = ops.lowering[i - 1];
    const auto& s2 = ops.lowering[i];
    h = h + hop * (s1.dagger() * s2 + s2.dagger() * s1);
  }
  const auto& s1 = ops.lowering[0];
  h = h + p.effective_g() * (ad * s1 + s1.dagger() * ops.a);
  h = h + p.eta * (ad + ops.a);
  return h.pruned();
}

struct CollapseChannel {
  SparseOperator op;
  double rate = 0.0;
  std::string label;
};

/// [(a, kappa), (sigma-_1, gamma), ..., (sigma-_N, gamma)].
///
/// Each channel contributes (rate/2) (2 C rho C^dag - C^dag C rho - rho C^dag C).
inline std::vector<CollapseChannel> build_collapse_operators(const ChainParams& p) {
  validate(p);
  auto ops = detail::chain_operators(p.space());
  std::vector<CollapseChannel> out;
  out.push_back({std::move(ops.a), p.kappa, "cavity"});
  for (int i = 1; i <= p.n_qubits; ++i) {
    out.push_back({std::move(ops.lowering[i - 1]), p.gamma, "qubit" + std::to_string(i)});
  }
  return out;
}

/// N_exc = a^dag a + sum_i sigma+_i sigma-_i, diagonal in the composite basis.
inline SparseOperator total_excitation_operator(const HilbertSpace& space) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(space.dim()));
  for (Index k = 0; k < space.dim(); ++k) {
    const int n = space.fock_of(k) + std::popcount(space.bits_of(k));
    if (n != 0) t.emplace_back(k, k, Complex{static_cast<double>(n), 0.0});
  }
  return SparseOperator::from_triplets(space.dim(), t);
}

}  // namespace sshpb
