#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "rscw/pauli.hpp"

namespace rscw {

// Stabilizer / syndrome type.  Everywhere in the workbench a type tag names
// the *stabilizer* side: X-type stabilizers detect Z-type error components,
// so the X pure-error table holds Z strings, and the class representative
// attached to an X syndrome is the logical Z operator.
enum class StabType : std::uint8_t { X = 0, Z = 1 };

inline StabType opposite(StabType t) {
  return t == StabType::X ? StabType::Z : StabType::X;
}

struct Stabilizer {
  StabType type;
  // Plaquette corner coordinate: the plaquette (pr, pc) covers data qubits
  // (r, c) with r in {pr-1, pr} and c in {pc-1, pc} that fall on the lattice.
  int pr = 0;
  int pc = 0;
  std::vector<int> qubits;  // ascending data-qubit indices, weight 2 or 4
};

// Distance-L rotated surface code on an L x L grid of data qubits
// (row-major index q = r*L + c).  X stabilizers sit on the even checkerboard
// and own the top/bottom boundaries; Z stabilizers sit on the odd
// checkerboard and own the left/right boundaries.  The logical X runs down
// column 0 and the logical Z runs along row 0.
class RscCode {
 public:
  static RscCode build(int distance);

  int distance() const { return distance_; }
  int n_data() const { return distance_ * distance_; }
  int n_stabilizers(StabType t) const {
    return static_cast<int>(stabilizers(t).size());
  }

  const std::vector<Stabilizer>& stabilizers(StabType t) const {
    return stabs_[static_cast<int>(t)];
  }
  const PauliOperator& stabilizer_pauli(StabType t, int k) const {
    return stab_paulis_[static_cast<int>(t)][k];
  }
  // logical(X) = X_L (vertical, weight L), logical(Z) = Z_L (horizontal).
  const PauliOperator& logical(StabType t) const {
    return logicals_[static_cast<int>(t)];
  }

  // Four-step CNOT schedule.  Step s of stabilizer k touches data qubit
  // schedule_qubit(t, k, s), or -1 when that corner is off the lattice
  // (boundary stabilizers idle through those steps).  X ancillas sweep
  // NW,NE,SW,SE and Z ancillas NW,SW,NE,SE, so the last two interactions of
  // each type run perpendicular to the corresponding logical operator.
  int schedule_qubit(StabType t, int k, int step) const {
    return schedule_[static_cast<int>(t)][k][step];
  }

  // Dense embedding of the syndrome bits of one round into a 2-D grid, used
  // as the spatial layout of the neural decoder input.
  // X grid: (L+1) x (L-1)/2.  Z grid: (L-1) x (L+1)/2.
  std::pair<int, int> grid_shape(StabType t) const {
    return grid_shape_[static_cast<int>(t)];
  }
  std::pair<int, int> grid_pos(StabType t, int k) const {
    return grid_pos_[static_cast<int>(t)][k];
  }

 private:
  RscCode() = default;

  int distance_ = 0;
  std::array<std::vector<Stabilizer>, 2> stabs_;
  std::array<std::vector<PauliOperator>, 2> stab_paulis_;
  std::array<PauliOperator, 2> logicals_;
  std::array<std::vector<std::array<int, 4>>, 2> schedule_;
  std::array<std::pair<int, int>, 2> grid_shape_;
  std::array<std::vector<std::pair<int, int>>, 2> grid_pos_;
};

// Syndrome of a static error: bit k = commutation(e, stabilizer k).
BitVec syndrome(const RscCode& code, const PauliOperator& e, StabType t);

// Pure-error (destabilizer) table for one syndrome type.  Row k is the
// single-component bit string of a minimum-weight chain whose syndrome is
// the unit string h_k; ties are broken toward lower data-qubit indices.
// Rows of the X table are Z strings and vice versa, so the two tables
// together store exactly (L^2-1) rows of L^2 bits = L^4 - L^2 bits.
struct PureErrorTable {
  StabType type = StabType::X;
  int distance = 0;
  std::vector<BitVec> rows;  // (L^2-1)/2 rows, each L^2 bits

  std::size_t stored_bits() const {
    return rows.size() * (rows.empty() ? 0 : rows[0].size());
  }
};

PureErrorTable build_pure_error_table(const RscCode& code, StabType t);

// E = L_c^class * prod_{k: s[k]=1} T(h_k), returned as a Pauli whose only
// nonzero component is the one detected by type-t stabilizers.
PauliOperator combine_error(const RscCode& code, const PureErrorTable& table,
                            int class_bit, const BitVec& s);

// Homology class of a type-t syndrome-free residual: 0 when it is
// stabilizer-equivalent to the identity, 1 when it carries the logical.
// Computed as the commutation parity with the conjugate logical
// (e.g. a Z-type residual is classed against X_L).
int homology_class(const RscCode& code, const PauliOperator& residual,
                   StabType t);

}  // namespace rscw
