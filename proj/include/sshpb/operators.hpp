#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "sshpb/errors.hpp"

namespace sshpb {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;
using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;
using Triplet = Eigen::Triplet<Complex, Index>;

/// Composite cavity (x) qubit_1 (x) ... (x) qubit_N space.
///
/// Basis index = fock * 2^N + sum_i b_i * 2^(N - i), where b_i is the excitation
/// bit of qubit i (1-based) and qubit 1 is the one coupled to the cavity. Bit 0 is
/// |g>, bit 1 is |e>.
struct HilbertSpace {
  int n_max = 1;
  int n_qubits = 1;

  HilbertSpace() = default;
  HilbertSpace(int n_max_, int n_qubits_) : n_max(n_max_), n_qubits(n_qubits_) {
    if (n_max < 1) throw DimensionError("HilbertSpace: n_max must be >= 1");
    if (n_qubits < 1 || n_qubits > 20) throw DimensionError("HilbertSpace: n_qubits must be in [1, 20]");
  }

  Index qubit_dim() const { return Index{1} << n_qubits; }
  Index fock_dim() const { return n_max + 1; }
  Index dim() const { return fock_dim() * qubit_dim(); }

  Index index(int fock, std::uint32_t bits) const {
    if (fock < 0 || fock > n_max) throw DimensionError("HilbertSpace: fock index out of range");
    if (bits >= static_cast<std::uint64_t>(qubit_dim())) throw DimensionError("HilbertSpace: qubit bits out of range");
    return static_cast<Index>(fock) * qubit_dim() + static_cast<Index>(bits);
  }
  int fock_of(Index idx) const { return static_cast<int>(idx / qubit_dim()); }
  std::uint32_t bits_of(Index idx) const { return static_cast<std::uint32_t>(idx % qubit_dim()); }

  /// Bit mask selecting qubit i (1-based) inside the qubit bit-string.
  std::uint32_t qubit_mask(int i) const { return std::uint32_t{1} << (n_qubits - i); }
  bool excited(std::uint32_t bits, int i) const { return (bits & qubit_mask(i)) != 0; }

  friend bool operator==(const HilbertSpace&, const HilbertSpace&) = default;
};

/// Immutable square sparse operator. Assembly from triplets sums duplicates.
class SparseOperator {
 public:
  SparseOperator() = default;

  explicit SparseOperator(Index dim) : m_(dim, dim) {}

  explicit SparseOperator(SparseMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionError("SparseOperator: matrix must be square");
    m_.makeCompressed();
  }

  static SparseOperator from_triplets(Index dim, std::span<const Triplet> triplets) {
    for (const auto& t : triplets) {
      if (t.row() < 0 || t.row() >= dim || t.col() < 0 || t.col() >= dim) {
        throw DimensionError("SparseOperator: triplet index out of range");
      }
    }
    SparseMatrix m(dim, dim);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return SparseOperator(std::move(m));
  }

  static SparseOperator identity(Index dim) {
    SparseMatrix m(dim, dim);
    m.setIdentity();
    return SparseOperator(std::move(m));
  }

  Index dim() const { return m_.rows(); }
  Index nonzeros() const { return m_.nonZeros(); }
  const SparseMatrix& matrix() const { return m_; }
  Complex coeff(Index row, Index col) const { return m_.coeff(row, col); }
  DenseMatrix to_dense() const { return DenseMatrix(m_); }

  SparseOperator dagger() const { return SparseOperator(SparseMatrix(m_.adjoint())); }

  /// Drops stored entries that are exactly zero.
  SparseOperator pruned() const {
    SparseMatrix m = m_;
    m.prune([](Index, Index, const Complex& v) { return v != Complex{0.0, 0.0}; });
    return SparseOperator(std::move(m));
  }

  friend SparseOperator operator+(const SparseOperator& a, const SparseOperator& b) {
    check_same_dim(a, b, "add");
    return SparseOperator(SparseMatrix(a.m_ + b.m_));
  }
  friend SparseOperator operator-(const SparseOperator& a, const SparseOperator& b) {
    check_same_dim(a, b, "subtract");
    return SparseOperator(SparseMatrix(a.m_ - b.m_));
  }
  friend SparseOperator operator*(const SparseOperator& a, const SparseOperator& b) {
    check_same_dim(a, b, "matmul");
    return SparseOperator(SparseMatrix(a.m_ * b.m_));
  }
  friend SparseOperator operator*(Complex c, const SparseOperator& a) { return SparseOperator(SparseMatrix(c * a.m_)); }
  friend SparseOperator operator*(double c, const SparseOperator& a) { return Complex{c, 0.0} * a; }

 private:
  static void check_same_dim(const SparseOperator& a, const SparseOperator& b, const char* what) {
    if (a.dim() != b.dim()) {
      throw DimensionError(std::string("SparseOperator ") + what + ": dimension mismatch (" +
                           std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    }
  }

  SparseMatrix m_;
};

inline SparseOperator add(const SparseOperator& a, const SparseOperator& b) { return a + b; }
inline SparseOperator scale(Complex c, const SparseOperator& a) { return c * a; }
inline SparseOperator matmul(const SparseOperator& a, const SparseOperator& b) { return a * b; }
inline SparseOperator dagger(const SparseOperator& a) { return a.dagger(); }
inline SparseOperator commutator(const SparseOperator& a, const SparseOperator& b) { return a * b - b * a; }

/// Largest absolute entry; 0 for an empty operator.
inline double max_abs(const SparseOperator& a) {
  double m = 0.0;
  for (Index k = 0; k < a.matrix().outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a.matrix(), k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

/// trace(A * rho) for a dense state matrix.
inline Complex expectation(const SparseOperator& a, const DenseMatrix& rho) {
  if (rho.rows() != a.dim() || rho.cols() != a.dim()) throw DimensionError("expectation: dimension mismatch");
  // trace(A rho) = sum_{r,c} A(r,c) rho(c,r)
  Complex acc{0.0, 0.0};
  for (Index c = 0; c < a.matrix().outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a.matrix(), c); it; ++it) acc += it.value() * rho(c, it.row());
  }
  return acc;
}

/// Annihilation operator on |0>..|n_max>: <n-1|a|n> = sqrt(n).
inline SparseOperator fock_annihilation(int n_max) {
  if (n_max < 1) throw DimensionError("fock_annihilation: n_max must be >= 1");
  std::vector<Triplet> t;
  for (int n = 1; n <= n_max; ++n) t.emplace_back(n - 1, n, Complex{std::sqrt(static_cast<double>(n)), 0.0});
  return SparseOperator::from_triplets(n_max + 1, t);
}

/// |g><e| with |g> = index 0 and |e> = index 1.
inline SparseOperator qubit_lowering() {
  const Triplet t[] = {Triplet(0, 1, Complex{1.0, 0.0})};
  return SparseOperator::from_triplets(2, t);
}

struct CavitySlot {};
struct QubitSlot {
  int index = 1;  // 1-based
};
using Slot = std::variant<CavitySlot, QubitSlot>;

/// I (x) ... (x) op (x) ... (x) I with op acting on `slot`.
inline SparseOperator embed(const SparseOperator& op, const Slot& slot, const HilbertSpace& space) {
  const Index dim = space.dim();
  std::vector<Triplet> t;

  if (std::holds_alternative<CavitySlot>(slot)) {
    if (op.dim() != space.fock_dim()) throw DimensionError("embed: operator does not match cavity dimension");
    t.reserve(static_cast<std::size_t>(op.nonzeros() * space.qubit_dim()));
    for (Index c = 0; c < op.matrix().outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(op.matrix(), c); it; ++it) {
        for (Index b = 0; b < space.qubit_dim(); ++b) {
          t.emplace_back(it.row() * space.qubit_dim() + b, c * space.qubit_dim() + b, it.value());
        }
      }
    }
    return SparseOperator::from_triplets(dim, t);
  }

  const int q = std::get<QubitSlot>(slot).index;
  if (q < 1 || q > space.n_qubits) throw DimensionError("embed: unknown qubit slot " + std::to_string(q));
  if (op.dim() != 2) throw DimensionError("embed: operator does not match qubit dimension");
  const std::uint32_t mask = space.qubit_mask(q);
  t.reserve(static_cast<std::size_t>(op.nonzeros() * dim / 2));
  for (Index col = 0; col < dim; ++col) {
    const auto bits = static_cast<std::uint32_t>(col % space.qubit_dim());
    const Index local_col = (bits & mask) ? 1 : 0;
    const Index base = col - (local_col ? static_cast<Index>(mask) : 0);
    for (SparseMatrix::InnerIterator it(op.matrix(), local_col); it; ++it) {
      t.emplace_back(base + (it.row() ? static_cast<Index>(mask) : 0), col, it.value());
    }
  }
  return SparseOperator::from_triplets(dim, t);
}

}  // namespace sshpb
