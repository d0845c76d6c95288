#pragma once

#include <cstddef>
#include <stdexcept>

#include "rscw/bits.hpp"

namespace rscw {

enum class Pauli : std::uint8_t { I = 0, X = 1, Z = 2, Y = 3 };

// n-qubit Pauli operator in symplectic (x|z) form.  Global phases are
// irrelevant for error tracking and are dropped: the product is the
// component-wise XOR and is therefore commutative here.
struct PauliOperator {
  std::size_t n = 0;
  BitVec x_bits;
  BitVec z_bits;

  PauliOperator() = default;
  explicit PauliOperator(std::size_t n_qubits)
      : n(n_qubits), x_bits(n_qubits), z_bits(n_qubits) {}

  static PauliOperator identity(std::size_t n_qubits) {
    return PauliOperator(n_qubits);
  }

  static PauliOperator single(std::size_t n_qubits, std::size_t q, Pauli p) {
    PauliOperator op(n_qubits);
    op.apply(q, p);
    return op;
  }

  void apply(std::size_t q, Pauli p) {
    if (q >= n) throw std::invalid_argument("qubit index out of range");
    if (p == Pauli::X || p == Pauli::Y) x_bits.flip(q);
    if (p == Pauli::Z || p == Pauli::Y) z_bits.flip(q);
  }

  Pauli at(std::size_t q) const {
    const bool x = x_bits.get(q), z = z_bits.get(q);
    if (x && z) return Pauli::Y;
    if (x) return Pauli::X;
    if (z) return Pauli::Z;
    return Pauli::I;
  }

  bool is_identity() const { return !x_bits.any() && !z_bits.any(); }

  std::size_t weight() const {
    std::size_t w = 0;
    for (std::size_t q = 0; q < n; ++q)
      if (x_bits.get(q) || z_bits.get(q)) ++w;
    return w;
  }

  PauliOperator& operator*=(const PauliOperator& o) {
    if (o.n != n) throw std::invalid_argument("PauliOperator size mismatch");
    x_bits ^= o.x_bits;
    z_bits ^= o.z_bits;
    return *this;
  }

  friend PauliOperator operator*(PauliOperator a, const PauliOperator& b) {
    a *= b;
    return a;
  }

  bool operator==(const PauliOperator&) const = default;
};

// 0 if P and Q commute, 1 if they anticommute:
// parity(P.x·Q.z) XOR parity(P.z·Q.x).
inline int commutation(const PauliOperator& p, const PauliOperator& q) {
  if (p.n != q.n) throw std::invalid_argument("PauliOperator size mismatch");
  return static_cast<int>(BitVec::and_parity(p.x_bits, q.z_bits) ^
                          BitVec::and_parity(p.z_bits, q.x_bits));
}

}  // namespace rscw
