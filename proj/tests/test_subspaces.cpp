#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sshpb/model.hpp"
#include "sshpb/subspaces.hpp"

using namespace sshpb;

namespace {

ChainParams undriven(int n_qubits, int n_max = 2) {
  ChainParams p = ChainParams::defaults(n_qubits);
  p.eta = 0.0;
  p.n_max = n_max;
  return p;
}

SubspaceSpectrum sector(const ChainParams& p, int n_exc) { return project_subspace(build_hamiltonian(p), p.space(), n_exc); }

double weight_on(const std::vector<ZeroMode>& modes, std::size_t basis_index) {
  double w = 0.0;  // projector weight, independent of the orientation inside the eigenspace
  for (const auto& z : modes) w += std::norm(z.vector(static_cast<Index>(basis_index)));
  return w;
}

}  // namespace

TEST(Basis, SizesAndOrder) {
  for (int n : {2, 4, 6, 8}) {
    const HilbertSpace s(2, n);
    EXPECT_EQ(enumerate_basis(s, 1).size(), static_cast<std::size_t>(n + 1));
    EXPECT_EQ(enumerate_basis(s, 2).size(), static_cast<std::size_t>(1 + n * (n + 1) / 2));
  }
  const auto b = enumerate_basis(HilbertSpace(2, 4), 2);
  EXPECT_EQ(b.labels.front(), "|g g g g, 2⟩");
  EXPECT_EQ(b.labels[1], "|e g g g, 1⟩");
  EXPECT_EQ(b.labels.back(), "|g g e e, 0⟩");
  for (std::size_t k = 1; k < b.size(); ++k) {
    const auto &x = b.states[k - 1], &y = b.states[k];
    EXPECT_TRUE(x.fock > y.fock || (x.fock == y.fock && x.bits > y.bits));
  }
  EXPECT_EQ(enumerate_basis(HilbertSpace(2, 1), 0).size(), 1u);
}

TEST(Projection, SingleExcitationBlockIsSshChain) {
  const auto p = undriven(4);
  const auto s = sector(p, 1);
  const std::vector<double> bonds{p.g, p.j1, p.j2, p.j1};
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 5; ++j) {
      const double expected = (j == i + 1) ? bonds[static_cast<std::size_t>(i)]
                              : (i == j + 1) ? bonds[static_cast<std::size_t>(j)]
                                             : 0.0;
      EXPECT_DOUBLE_EQ(s.hamiltonian_block(i, j).real(), expected);
      EXPECT_EQ(s.hamiltonian_block(i, j).imag(), 0.0);
    }
  }
}

TEST(Projection, SpectrumInvariants) {
  for (int n : {2, 4, 6}) {
    for (int ne : {1, 2}) {
      auto p = undriven(n);
      p.delta = 1.5;
      const auto s = sector(p, ne);
      const auto& v = s.eigenvectors;
      const Index m = v.rows();
      EXPECT_LE((v.adjoint() * v - DenseMatrix::Identity(m, m)).cwiseAbs().maxCoeff(), 1e-10);
      const DenseMatrix rec = v * s.eigenvalues.cast<Complex>().asDiagonal() * v.adjoint();
      EXPECT_LE((s.hamiltonian_block - rec).cwiseAbs().maxCoeff(), 1e-10 * s.eigenvalues.cwiseAbs().maxCoeff());
      for (Index k = 1; k < m; ++k) EXPECT_LE(s.eigenvalues(k - 1), s.eigenvalues(k));
    }
  }
}

TEST(Projection, DimerSpectrum) {
  const auto p = undriven(2);
  const auto s = sector(p, 1);
  const double e = std::sqrt(p.g * p.g + p.j1 * p.j1);
  EXPECT_NEAR(s.eigenvalues(0), -e, 1e-12);
  EXPECT_NEAR(s.eigenvalues(1), 0.0, 1e-12);
  EXPECT_NEAR(s.eigenvalues(2), e, 1e-12);
}

TEST(Projection, RejectsDrivenAndTruncated) {
  auto p = undriven(4);
  p.eta = 0.5;
  EXPECT_THROW(sector(p, 1), ParamError);
  const auto q = undriven(4, 2);
  EXPECT_THROW(sector(q, 3), DimensionError);
}

TEST(Projection, ChiralSymmetry) {
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(0.5, 20.0);
  for (int n : {2, 4, 6, 8}) {
    auto p = undriven(n);
    p.g = u(rng);
    p.j1 = u(rng);
    p.j2 = u(rng);
    const auto e = sector(p, 1).eigenvalues;
    for (Index k = 0; k < e.size(); ++k) EXPECT_NEAR(e(k), -e(e.size() - 1 - k), 1e-10);
  }
}

TEST(Graph, SingleExcitationPath) {
  const auto p = undriven(4);
  const auto g = qll_graph(sector(p, 1), p);
  ASSERT_EQ(g.edges.size(), 4u);
  const std::vector<double> bonds{p.g, p.j1, p.j2, p.j1};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(g.edges[k].a, k);
    EXPECT_EQ(g.edges[k].b, k + 1);
    EXPECT_DOUBLE_EQ(g.edges[k].weight, bonds[k]);
  }
  EXPECT_EQ(g.nodes.labels[0], "|g g g g, 1⟩");
}

TEST(Graph, AdjacencyMatchesDenseEnumeration) {
  for (int n : {2, 4, 6}) {
    const auto p = undriven(n);
    const auto s = sector(p, 2);
    const auto g = qll_graph(s, p);
    // Oracle: walk every pair of basis states through the dense Kronecker Hamiltonian.
    const auto h = oracle::hamiltonian({n, p.n_max, p.g, p.j1, p.j2, 0.0, 0.0, p.kappa, p.gamma, 0.0, 0.0});
    const HilbertSpace space = p.space();
    std::size_t expected_edges = 0;
    for (std::size_t i = 0; i < s.basis.size(); ++i) {
      std::size_t degree = 0;
      for (std::size_t j = 0; j < s.basis.size(); ++j) {
        const auto &x = s.basis.states[i], &y = s.basis.states[j];
        const double w = std::abs(h(space.index(x.fock, x.bits), space.index(y.fock, y.bits)));
        if (i != j && w > 0.0) {
          ++degree;
          if (i < j) ++expected_edges;
        }
      }
      EXPECT_EQ(g.degree(i), degree) << s.basis.labels[i];
    }
    EXPECT_EQ(g.edges.size(), expected_edges);
    for (const auto& e : g.edges) EXPECT_DOUBLE_EQ(e.weight, std::abs(s.hamiltonian_block(e.a, e.b)));
  }
}

TEST(Graph, TwoExcitationFeatures) {
  const auto p = undriven(4);
  const auto g = qll_graph(sector(p, 2), p);
  const std::size_t two_photon = *g.nodes.find(2, 0);
  ASSERT_EQ(g.degree(two_photon), 1u);
  const auto e = g.edges_of(two_photon).front();
  EXPECT_NEAR(e.weight, std::sqrt(2.0) * p.g, 1e-12);
  const std::size_t partner = e.a == two_photon ? e.b : e.a;
  EXPECT_EQ(g.nodes.labels[partner], "|e g g g, 1⟩");
  // With J1 = sqrt(2) g the intracell bonds share that weight; among photon-changing
  // edges it is unique, and with J1 != sqrt(2) g it is unique outright.
  int photon_sqrt2g = 0;
  for (const auto& edge : g.edges) {
    const bool photon_changing = g.nodes.states[edge.a].fock != g.nodes.states[edge.b].fock;
    photon_sqrt2g += photon_changing && std::abs(edge.weight - std::sqrt(2.0) * p.g) < 1e-12;
  }
  EXPECT_EQ(photon_sqrt2g, 1);
  auto q = p;
  q.j1 = 1.3 * q.g;
  int sqrt2g = 0;
  for (const auto& edge : qll_graph(sector(q, 2), q).edges) sqrt2g += std::abs(edge.weight - std::sqrt(2.0) * q.g) < 1e-12;
  EXPECT_EQ(sqrt2g, 1);
  // Photon-free corners of the breathing lattice, from the enumeration above.
  EXPECT_EQ(g.degree(*g.nodes.find(0, 0b1100)), 2u);
  EXPECT_EQ(g.degree(*g.nodes.find(0, 0b0011)), 1u);
  EXPECT_EQ(g.coordinates.size(), g.nodes.size());
}

TEST(ZeroModes, Counts) {
  for (int n : {2, 4, 6, 8}) {
    const auto p = undriven(n);
    const double tol = default_zero_tolerance(p);
    EXPECT_EQ(zero_modes(sector(p, 1), tol).size(), 1u) << "N_a=" << n;
    EXPECT_EQ(zero_modes(sector(p, 2), tol).size(), static_cast<std::size_t>(std::max(0, n / 2 - 1))) << "N_a=" << n;
  }
}

TEST(ZeroModes, DeterministicOrthonormalBasis) {
  const auto p = undriven(8);
  const auto modes = zero_modes(sector(p, 2), default_zero_tolerance(p));
  ASSERT_EQ(modes.size(), 3u);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    for (std::size_t j = 0; j < modes.size(); ++j) {
      EXPECT_NEAR(std::abs(modes[i].vector.dot(modes[j].vector)), i == j ? 1.0 : 0.0, 1e-10);
    }
    Index first = 0;
    while (std::abs(modes[i].vector(first)) < 1e-12) ++first;
    EXPECT_GT(modes[i].vector(first).real(), 0.0);
    EXPECT_NEAR(modes[i].vector(first).imag(), 0.0, 1e-14);
  }
  const auto again = zero_modes(sector(p, 2), default_zero_tolerance(p));
  for (std::size_t i = 0; i < modes.size(); ++i) EXPECT_EQ(modes[i].vector, again[i].vector);
}

TEST(ZeroModes, SingleExcitationLocalization) {
  for (int n : {2, 4, 6, 8}) {
    const auto p = undriven(n);
    const auto s = sector(p, 1);
    const auto modes = zero_modes(s, default_zero_tolerance(p));
    ASSERT_EQ(modes.size(), 1u);
    const auto loc = edge_localization(modes[0].vector, s.basis);
    EXPECT_GT(std::abs(loc.single_photon_amplitude), 0.8);
    EXPECT_LT(loc.max_even_site_amplitude, 1e-10);
    if (n == 4) {
      EXPECT_NEAR(std::abs(loc.single_photon_amplitude), 0.8138, 1e-3);
    }

    const Eigen::VectorXd psi = ssh_zero_mode_oracle(p);
    EXPECT_GE(std::abs(psi.cast<Complex>().dot(modes[0].vector)), 1.0 - 1e-10);
  }
}

TEST(ZeroModes, TwoExcitationWeights) {
  for (int n : {4, 6, 8}) {
    const auto p = undriven(n);
    const auto s = sector(p, 2);
    const auto modes = zero_modes(s, default_zero_tolerance(p));
    EXPECT_LT(weight_on(modes, *s.basis.find(2, 0)), 1e-10);
    for (const auto& z : modes) EXPECT_LT(edge_localization(z.vector, s.basis).two_photon_weight, 1e-10);
  }
}

TEST(ZeroModes, BulkStatesCarryWeakTwoPhotonWeight) {
  const auto p = undriven(4);
  const auto s = sector(p, 2);
  const std::size_t two_photon = *s.basis.find(2, 0);
  // Nearest dressed levels on either side of zero.
  const Index zero = 5;
  ASSERT_NEAR(s.eigenvalues(zero), 0.0, 1e-10);
  for (Index k : {zero - 1, zero + 1}) {
    const double w = std::norm(s.eigenvectors(static_cast<Index>(two_photon), k));
    EXPECT_GT(w, 1e-6);
    EXPECT_LT(w, 0.15);
  }
}

TEST(Oracle, TransferMatrixVectors) {
  ChainParams p = undriven(4);
  p.g = 1.0;
  p.j1 = std::sqrt(2.0);
  p.j2 = 0.2;
  const Eigen::VectorXd v4 = ssh_zero_mode_oracle(p);
  const Eigen::VectorXd e4 = (Eigen::VectorXd(5) << 0.8138, 0.0, -0.5755, 0.0, 0.0814).finished();
  EXPECT_LT((v4 - e4).cwiseAbs().maxCoeff(), 1e-4);
  const auto ref = oracle::chain_zero_mode({1.0, std::sqrt(2.0), 0.2, std::sqrt(2.0)});
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(v4(k), ref[static_cast<std::size_t>(k)], 1e-15);

  p.n_qubits = 2;
  const Eigen::VectorXd v2 = ssh_zero_mode_oracle(p);
  EXPECT_LT((v2 - Eigen::Vector3d(0.8165, 0.0, -0.5774)).cwiseAbs().maxCoeff(), 1e-4);

  std::mt19937 rng(31);
  std::uniform_real_distribution<double> u(0.5, 20.0);
  for (int n : {2, 4, 6, 8}) {
    auto q = undriven(n);
    q.g = u(rng);
    q.j1 = u(rng);
    q.j2 = u(rng);
    const auto s = sector(q, 1);
    const Eigen::VectorXd psi = ssh_zero_mode_oracle(q);
    EXPECT_LE((s.hamiltonian_block * psi.cast<Complex>()).norm(), 1e-12);
  }

  auto bad = undriven(4);
  bad.delta = 1.0;
  EXPECT_THROW(ssh_zero_mode_oracle(bad), ParamError);
  EXPECT_THROW(ssh_zero_mode_oracle(undriven(1)), ParamError);
}
