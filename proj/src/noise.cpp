#include "rscw/noise.hpp"

#include <algorithm>
#include <stdexcept>

namespace rscw {

void NoiseParams::validate() const {
  for (double p : {p_storage, p_gate, p_meas})
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("noise probabilities must lie in [0, 1]");
}

FrameSimulator::FrameSimulator(const RscCode& code)
    : code_(&code),
      n_data_(code.n_data()),
      n_stab_(code.n_stabilizers(StabType::X)) {
  fx_.assign(n_data_ + 2 * n_stab_, 0);
  fz_.assign(n_data_ + 2 * n_stab_, 0);
}

void FrameSimulator::reset() {
  std::fill(fx_.begin(), fx_.end(), 0);
  std::fill(fz_.begin(), fz_.end(), 0);
  forced_meas_.clear();
}

void FrameSimulator::queue_meas_flip(StabType t, int k) {
  forced_meas_.push_back({t, k});
}

void FrameSimulator::run_round(const NoiseParams& params, Rng& rng,
                               std::array<SyndromeArray, 2>& out, int t) {
  // Storage noise on data qubits.
  if (params.p_storage > 0.0)
    for (int q = 0; q < n_data_; ++q)
      if (rng.bernoulli(params.p_storage))
        apply_pauli(q, static_cast<Pauli>(rng.below(3) + 1));

  // Fresh ancillas.
  for (int a = n_data_; a < n_data_ + 2 * n_stab_; ++a) fx_[a] = fz_[a] = 0;

  // Four interleaved CNOT steps; X and Z extraction circuits never touch the
  // same data qubit within a step.
  for (int step = 0; step < 4; ++step) {
    for (auto ty : {StabType::X, StabType::Z}) {
      for (int k = 0; k < n_stab_; ++k) {
        const int q = code_->schedule_qubit(ty, k, step);
        if (q < 0) continue;
        const int a = anc_index(ty, k);
        const int control = (ty == StabType::X) ? a : q;
        const int target = (ty == StabType::X) ? q : a;
        cnot(control, target);
        if (params.p_gate > 0.0 && rng.bernoulli(params.p_gate)) {
          const std::uint32_t which = rng.below(15) + 1;
          apply_pauli(control, static_cast<Pauli>(which >> 2));
          apply_pauli(target, static_cast<Pauli>(which & 3));
        }
      }
    }
  }

  // Readout: Z errors flip an X-basis measurement and vice versa.
  for (auto ty : {StabType::X, StabType::Z}) {
    for (int k = 0; k < n_stab_; ++k) {
      const int a = anc_index(ty, k);
      std::uint8_t bit = (ty == StabType::X) ? fz_[a] : fx_[a];
      if (params.p_meas > 0.0 && rng.bernoulli(params.p_meas)) bit ^= 1;
      for (const auto& f : forced_meas_)
        if (f.first == ty && f.second == k) bit ^= 1;
      out[static_cast<int>(ty)].set(t, k, bit);
    }
  }
  forced_meas_.clear();
}

PauliOperator FrameSimulator::data_residual() const {
  PauliOperator r(n_data_);
  for (int q = 0; q < n_data_; ++q) {
    if (fx_[q]) r.x_bits.set(q);
    if (fz_[q]) r.z_bits.set(q);
  }
  return r;
}

void FrameSimulator::apply_to_frame(const PauliOperator& data_pauli) {
  if (static_cast<int>(data_pauli.n) != n_data_)
    throw std::invalid_argument("frame correction size mismatch");
  for (int q = 0; q < n_data_; ++q) {
    fx_[q] ^= data_pauli.x_bits.get(q);
    fz_[q] ^= data_pauli.z_bits.get(q);
  }
}

void label_residual(const RscCode& code,
                    const std::array<PureErrorTable, 2>& tables,
                    LabeledSample& sample) {
  for (auto ty : {StabType::X, StabType::Z}) {
    const int ti = static_cast<int>(ty);
    sample.label_s[ti] = syndrome(code, sample.residual, ty);
    const auto strip =
        combine_error(code, tables[ti], 0, sample.label_s[ti]);
    sample.label_class[ti] =
        homology_class(code, sample.residual * strip, ty);
  }
}

namespace {

LabeledSample simulate_with_tables(const RscCode& code,
                                   const std::array<PureErrorTable, 2>& tables,
                                   const NoiseParams& params, int T,
                                   std::uint64_t seed) {
  Rng rng(seed);
  FrameSimulator sim(code);
  LabeledSample sample;
  const int m = code.n_stabilizers(StabType::X);
  sample.syndromes = {SyndromeArray(T, m), SyndromeArray(T, m)};
  for (int t = 0; t < T; ++t) sim.run_round(params, rng, sample.syndromes, t);
  sample.residual = sim.data_residual();
  label_residual(code, tables, sample);
  return sample;
}

}  // namespace

LabeledSample simulate_rounds(const RscCode& code, const NoiseParams& params,
                              int T, std::uint64_t seed) {
  params.validate();
  if (T < 1) throw std::invalid_argument("round count must be positive");
  const std::array<PureErrorTable, 2> tables = {
      build_pure_error_table(code, StabType::X),
      build_pure_error_table(code, StabType::Z)};
  return simulate_with_tables(code, tables, params, T, seed);
}

Dataset generate_dataset(const RscCode& code, const NoiseParams& params,
                         int T, std::size_t n_samples, std::uint64_t seed) {
  params.validate();
  if (T < 1) throw std::invalid_argument("round count must be positive");
  const std::array<PureErrorTable, 2> tables = {
      build_pure_error_table(code, StabType::X),
      build_pure_error_table(code, StabType::Z)};
  Dataset ds;
  ds.distance = code.distance();
  ds.rounds = T;
  ds.params = params;
  ds.samples.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i)
    ds.samples.push_back(
        simulate_with_tables(code, tables, params, T, Rng::derive(seed, i)));
  return ds;
}

}  // namespace rscw
