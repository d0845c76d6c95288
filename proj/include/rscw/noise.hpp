#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rscw/code.hpp"
#include "rscw/rng.hpp"

namespace rscw {

// Circuit-level Pauli noise.  Per round: every data qubit suffers X, Y or Z
// with probability p_storage/3 each; after every CNOT one of the fifteen
// non-identity two-qubit Paulis is applied with probability p_gate/15 each;
// every ancilla readout flips with probability p_meas.  The phenomenological
// model is the same circuit with p_gate forced to zero.
struct NoiseParams {
  double p_storage = 0.0;
  double p_gate = 0.0;
  double p_meas = 0.0;

  static NoiseParams standard(double p) { return {p, p, p}; }
  static NoiseParams reweighted() { return {0.0024, 0.0072, 0.012}; }
  static NoiseParams google() { return {0.004, 0.005, 0.018}; }
  static NoiseParams phenomenological(double p) { return {p, 0.0, p}; }

  bool phenomenological_mode() const { return p_gate == 0.0; }
  void validate() const;
};

// Raw per-round measurement outcomes of one stabilizer type (not
// XOR-differenced): bit (t, k) is what the type's ancilla k read in round t.
struct SyndromeArray {
  int rounds = 0;
  int n_stab = 0;
  std::vector<std::uint8_t> bits;  // round-major, rounds * n_stab

  SyndromeArray() = default;
  SyndromeArray(int T, int m) : rounds(T), n_stab(m), bits(T * m, 0) {}

  std::uint8_t get(int t, int k) const { return bits[t * n_stab + k]; }
  void set(int t, int k, std::uint8_t v) { bits[t * n_stab + k] = v; }

  std::size_t weight() const {
    std::size_t w = 0;
    for (auto b : bits) w += b;
    return w;
  }

  // Detection events: round t XORed with round t-1, round 0 against zero.
  std::vector<std::uint8_t> detection_events() const {
    std::vector<std::uint8_t> d(bits.size());
    for (int t = 0; t < rounds; ++t)
      for (int k = 0; k < n_stab; ++k)
        d[t * n_stab + k] =
            bits[t * n_stab + k] ^ (t ? bits[(t - 1) * n_stab + k] : 0);
    return d;
  }
};

struct LabeledSample {
  std::array<SyndromeArray, 2> syndromes;  // indexed by StabType
  PauliOperator residual;                  // data frame after the window
  std::array<int, 2> label_class{};        // homology bit per syndrome type
  std::array<BitVec, 2> label_s;           // syndrome of residual per type
};

// Pauli-frame simulator for repeated stabilizer measurement.  The frame
// starts clean and persists across rounds (and across decode windows when a
// trajectory keeps the simulator alive); ancilla components are reset at the
// start of each round's extraction circuit.  X ancillas are CNOT controls
// prepared in |+>, Z ancillas are CNOT targets prepared in |0>, so a
// measurement outcome is the commutation parity the circuit propagates into
// the ancilla, XOR the readout flip.
class FrameSimulator {
 public:
  explicit FrameSimulator(const RscCode& code);

  void reset();

  // Runs one extraction round; raw outcomes are written into row t of the
  // per-type syndrome arrays.
  void run_round(const NoiseParams& params, Rng& rng,
                 std::array<SyndromeArray, 2>& out, int t);

  PauliOperator data_residual() const;

  // Applies a correction (or a test injection) to the data frame.
  void apply_to_frame(const PauliOperator& data_pauli);

  // Queues a deterministic readout flip for the next measurement of the
  // given ancilla (test hook; consumed by the next run_round).
  void queue_meas_flip(StabType t, int k);

  const RscCode& code() const { return *code_; }

 private:
  int anc_index(StabType t, int k) const {
    return n_data_ + (t == StabType::Z ? n_stab_ : 0) + k;
  }
  void apply_pauli(int q, Pauli p) {
    if (p == Pauli::X || p == Pauli::Y) fx_[q] ^= 1;
    if (p == Pauli::Z || p == Pauli::Y) fz_[q] ^= 1;
  }
  // Frame conjugation through CNOT: X copies control->target, Z copies
  // target->control.
  void cnot(int control, int target) {
    fx_[target] ^= fx_[control];
    fz_[control] ^= fz_[target];
  }

  const RscCode* code_;
  int n_data_ = 0;
  int n_stab_ = 0;
  std::vector<std::uint8_t> fx_, fz_;  // data qubits then X, Z ancillas
  std::vector<std::pair<StabType, int>> forced_meas_;
};

// One decode window sampled from a clean frame: T rounds of raw syndromes,
// the residual data frame, and its per-type (class, syndrome) labels.
LabeledSample simulate_rounds(const RscCode& code, const NoiseParams& params,
                              int T, std::uint64_t seed);

// Label an existing residual against prebuilt pure-error tables.
void label_residual(const RscCode& code,
                    const std::array<PureErrorTable, 2>& tables,
                    LabeledSample& sample);

struct Dataset {
  int distance = 0;
  int rounds = 0;
  NoiseParams params;
  std::vector<LabeledSample> samples;
};

// Sample i is drawn from substream (seed, i), so any sample can be
// regenerated in isolation and workers can partition the index range.
Dataset generate_dataset(const RscCode& code, const NoiseParams& params,
                         int T, std::size_t n_samples, std::uint64_t seed);

}  // namespace rscw
