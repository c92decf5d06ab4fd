#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sshpb/model.hpp"

using namespace sshpb;

namespace {

oracle::Chain to_oracle(const ChainParams& p) {
  return {p.n_qubits, p.n_max, p.g, p.j1, p.j2, p.delta, p.eta, p.kappa, p.gamma, p.delta_g, p.delta_omega1};
}

ChainParams random_params(std::mt19937& rng, int n_qubits) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ChainParams p = ChainParams::defaults(n_qubits);
  p.n_max = 3;
  p.g = 5.0 + 10.0 * u(rng);
  p.j1 = 10.0 + 10.0 * u(rng);
  p.j2 = 5.0 * u(rng);
  p.delta = -20.0 + 40.0 * u(rng);
  p.eta = u(rng);
  p.delta_g = -2.0 + 4.0 * u(rng);
  p.delta_omega1 = -2.0 + 4.0 * u(rng);
  return p;
}

}  // namespace

TEST(ChainParams, Defaults) {
  const auto p = ChainParams::defaults(4);
  EXPECT_EQ(p.n_qubits, 4);
  EXPECT_DOUBLE_EQ(p.g, 10.0);
  EXPECT_DOUBLE_EQ(p.j1, std::sqrt(2.0) * 10.0);
  EXPECT_DOUBLE_EQ(p.j2, 2.0);
  EXPECT_DOUBLE_EQ(p.kappa, 0.5);
  EXPECT_DOUBLE_EQ(p.gamma, 1.0);
  EXPECT_EQ(p.n_max, 5);
  EXPECT_TRUE(regime_violations(p).empty());
  EXPECT_EQ(p.space().dim(), 6 * 16);
}

TEST(ChainParams, HardConstraints) {
  auto bad = [](auto mutate) {
    ChainParams p = ChainParams::defaults(2);
    mutate(p);
    return p;
  };
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.n_qubits = 3; })), ParamError);
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.n_qubits = 0; })), ParamError);
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.g = 0.0; })), ParamError);
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.kappa = 0.0; })), ParamError);
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.gamma = -1.0; })), ParamError);
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.eta = -0.1; })), ParamError);
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.n_max = 0; })), ParamError);
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.delta_g = -10.0; })), ParamError);
  EXPECT_THROW(validate(bad([](ChainParams& p) { p.delta = std::nan(""); })), ParamError);
  try {
    validate(bad([](ChainParams& p) { p.n_qubits = 3; }));
  } catch (const ParamError& e) {
    EXPECT_STREQ(e.what(), "n_qubits must be 1 or even");
  }
  EXPECT_NO_THROW(validate(bad([](ChainParams& p) { p.n_qubits = 1; })));
}

TEST(ChainParams, RegimeChecks) {
  ChainParams p = ChainParams::defaults(4);
  p.j1 = 20.0;  // exceeds sqrt(2) g
  EXPECT_EQ(regime_violations(p).size(), 1u);
  EXPECT_NO_THROW(validate(p, RegimeCheck::Skip));
  EXPECT_EQ(validate(p, RegimeCheck::Warn).size(), 1u);
  EXPECT_THROW(validate(p, RegimeCheck::Enforce), ParamError);

  p = ChainParams::defaults(4);
  p.delta_g = 5.0;  // g' = 15 > j1
  EXPECT_FALSE(regime_violations(p).empty());
  EXPECT_TRUE(regime_violations(ChainParams::defaults(1)).empty());
}

TEST(Hamiltonian, ResonantJcDoublet) {
  ChainParams p = ChainParams::defaults(1);
  p.n_max = 1;
  p.delta = 0.0;
  p.eta = 0.0;
  p.g = 1.0;
  const auto h = build_hamiltonian(p);
  const HilbertSpace s = p.space();
  EXPECT_EQ(h.coeff(s.index(1, 0), s.index(0, 1)), Complex(1.0, 0.0));
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h.to_dense());
  const Eigen::Vector4d expected(-1.0, 0.0, 0.0, 1.0);
  EXPECT_LT((es.eigenvalues() - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Hamiltonian, TextbookJcEntries) {
  ChainParams p = ChainParams::defaults(1);
  p.n_max = 4;
  p.delta = 3.0;
  p.eta = 0.7;
  p.g = 2.0;
  const auto h = build_hamiltonian(p).to_dense();
  const HilbertSpace s = p.space();
  DenseMatrix ref = DenseMatrix::Zero(s.dim(), s.dim());
  for (int n = 0; n <= p.n_max; ++n) {
    for (std::uint32_t e = 0; e <= 1; ++e) ref(s.index(n, e), s.index(n, e)) = p.delta * (n + static_cast<int>(e));
    if (n >= 1) {  // g sqrt(n) |n-1, e><n, g| + h.c.
      const double c = p.g * std::sqrt(static_cast<double>(n));
      ref(s.index(n - 1, 1), s.index(n, 0)) = c;
      ref(s.index(n, 0), s.index(n - 1, 1)) = c;
    }
    if (n + 1 <= p.n_max) {
      for (std::uint32_t e = 0; e <= 1; ++e) {
        const double c = p.eta * std::sqrt(static_cast<double>(n + 1));
        ref(s.index(n + 1, e), s.index(n, e)) = c;
        ref(s.index(n, e), s.index(n + 1, e)) = c;
      }
    }
  }
  EXPECT_LT((h - ref).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Hamiltonian, MatchesKroneckerOracle) {
  std::mt19937 rng(17);
  for (int n : {1, 2, 4}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto p = random_params(rng, n);
      const DenseMatrix h = build_hamiltonian(p).to_dense();
      EXPECT_LT((h - oracle::hamiltonian(to_oracle(p))).cwiseAbs().maxCoeff(), 1e-13) << "n_qubits=" << n;
    }
  }
}

TEST(Hamiltonian, HermitianAndExcitationConserving) {
  std::mt19937 rng(23);
  for (int n : {1, 2, 4, 6}) {
    auto p = random_params(rng, n);
    const auto h = build_hamiltonian(p);
    EXPECT_LE(max_abs(h - h.dagger()), 1e-12);
    p.eta = 0.0;
    const auto h0 = build_hamiltonian(p);
    EXPECT_LE(max_abs(commutator(h0, total_excitation_operator(p.space()))), 1e-12);
  }
}

TEST(Hamiltonian, ZeroPerturbationIsBitExact) {
  ChainParams p = ChainParams::defaults(4);
  p.delta = 3.5;
  ChainParams q = p;
  q.delta_g = 0.0;
  q.delta_omega1 = 0.0;
  const auto a = build_hamiltonian(p), b = build_hamiltonian(q);
  EXPECT_EQ(a.nonzeros(), b.nonzeros());
  EXPECT_EQ(a.to_dense(), b.to_dense());
}

TEST(Hamiltonian, SpectralExamples) {
  ChainParams p = ChainParams::defaults(4);
  p.eta = 0.0;
  const auto h = build_hamiltonian(p).to_dense();
  // single-excitation sector: |g g g g, 1> and one excited qubit with no photons
  const HilbertSpace s = p.space();
  std::vector<Index> idx{s.index(1, 0)};
  for (int i = 1; i <= 4; ++i) idx.push_back(s.index(0, s.qubit_mask(i)));
  DenseMatrix block(5, 5);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) block(i, j) = h(idx[i], idx[j]);
  }
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> es(block);
  int zeros = 0;
  for (int k = 0; k < 5; ++k) zeros += std::abs(es.eigenvalues()(k)) < 1e-10 * p.g;
  EXPECT_EQ(zeros, 1);
}

TEST(Collapse, ChannelsAndRates) {
  auto p = ChainParams::defaults(2);
  p.n_max = 2;
  const auto c = build_collapse_operators(p);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_DOUBLE_EQ(c[0].rate, p.kappa);
  EXPECT_DOUBLE_EQ(c[1].rate, p.gamma);
  EXPECT_DOUBLE_EQ(c[2].rate, p.gamma);
  const auto ref = oracle::collapse(to_oracle(p));
  for (std::size_t k = 0; k < c.size(); ++k) EXPECT_EQ(c[k].op.to_dense(), ref[k].first);
}

TEST(Excitation, Eigenvalues) {
  const HilbertSpace s(3, 4);
  const auto n = total_excitation_operator(s);
  EXPECT_EQ(n.coeff(s.index(0, 0), s.index(0, 0)), Complex(0.0, 0.0));
  EXPECT_EQ(n.coeff(s.index(1, s.qubit_mask(4)), s.index(1, s.qubit_mask(4))), Complex(2.0, 0.0));
  EXPECT_EQ(n.coeff(s.index(3, 0b1111), s.index(3, 0b1111)), Complex(7.0, 0.0));
}
