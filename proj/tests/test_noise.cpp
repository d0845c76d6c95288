#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "rscw/noise.hpp"

using namespace rscw;

namespace {

// Oracle: the residual left by one storage fault is the fault itself —
// noiseless extraction never writes back onto data qubits.
PauliOperator storage_residual(const RscCode& code, int q, Pauli p) {
  return PauliOperator::single(code.n_data(), q, p);
}

// Oracle: the residual left by one gate fault, derived by walking the
// schedule with the two-qubit truth table (X copies control->target, Z
// copies target->control), independently of the production simulator.
// X-circuit CNOTs have the ancilla as control and the data qubit as target;
// Z-circuit CNOTs are the reverse.  Only the ancilla's X component leaves an
// X ancilla (via later CNOTs of its own stabilizer) and only the Z component
// leaves a Z ancilla; ancilla state dies at the next reset.
PauliOperator gate_residual(const RscCode& code, StabType ty, int k, int step,
                            Pauli on_control, Pauli on_target) {
  PauliOperator res(code.n_data());
  const int q = code.schedule_qubit(ty, k, step);
  const Pauli data_p = (ty == StabType::X) ? on_target : on_control;
  const Pauli anc_p = (ty == StabType::X) ? on_control : on_target;
  res.apply(q, data_p);
  const bool anc_x = (anc_p == Pauli::X || anc_p == Pauli::Y);
  const bool anc_z = (anc_p == Pauli::Z || anc_p == Pauli::Y);
  for (int s = step + 1; s < 4; ++s) {
    const int q2 = code.schedule_qubit(ty, k, s);
    if (q2 < 0) continue;
    if (ty == StabType::X && anc_x) res.apply(q2, Pauli::X);
    if (ty == StabType::Z && anc_z) res.apply(q2, Pauli::Z);
  }
  return res;
}

}  // namespace

TEST_CASE("zero noise: silent syndromes, identity residual") {
  auto code = RscCode::build(5);
  auto s = simulate_rounds(code, NoiseParams{}, 6, 42);
  for (auto ty : {StabType::X, StabType::Z}) {
    CHECK(s.syndromes[static_cast<int>(ty)].weight() == 0);
    CHECK(!s.label_s[static_cast<int>(ty)].any());
    CHECK(s.label_class[static_cast<int>(ty)] == 0);
  }
  CHECK(s.residual.is_identity());
}

TEST_CASE("injected measurement flip: raw bit set in that round only") {
  auto code = RscCode::build(3);
  FrameSimulator sim(code);
  Rng rng(1);
  std::array<SyndromeArray, 2> out = {SyndromeArray(3, 4), SyndromeArray(3, 4)};
  for (int t = 0; t < 3; ++t) {
    if (t == 1) sim.queue_meas_flip(StabType::X, 2);
    sim.run_round(NoiseParams{}, rng, out, t);
  }
  CHECK(out[0].weight() == 1);
  CHECK(out[0].get(1, 2) == 1);
  CHECK(out[1].weight() == 0);
  CHECK(sim.data_residual().is_identity());
}

TEST_CASE("injected data error: raw syndrome persists from its round on") {
  auto code = RscCode::build(5);
  FrameSimulator sim(code);
  Rng rng(1);
  const int T = 5;
  const int m = code.n_stabilizers(StabType::X);
  std::array<SyndromeArray, 2> out = {SyndromeArray(T, m),
                                      SyndromeArray(T, m)};
  auto err = PauliOperator::single(code.n_data(), 12, Pauli::Z);
  const BitVec expect = syndrome(code, err, StabType::X);
  REQUIRE(expect.weight() == 2);
  for (int t = 0; t < T; ++t) {
    if (t == 2) sim.apply_to_frame(err);
    sim.run_round(NoiseParams{}, rng, out, t);
  }
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < m; ++k)
      CHECK(out[0].get(t, k) == (t >= 2 ? expect.get(k) : 0));
  CHECK(out[1].weight() == 0);
  CHECK(sim.data_residual() == err);
}

TEST_CASE("single-Pauli injections read back through the extraction circuit") {
  // End-to-end truth-table check: for every data qubit and Pauli, one
  // noiseless round must report exactly the commutation parities.
  auto code = RscCode::build(5);
  const int m = code.n_stabilizers(StabType::X);
  for (int q = 0; q < code.n_data(); ++q) {
    for (Pauli p : {Pauli::X, Pauli::Z, Pauli::Y}) {
      FrameSimulator sim(code);
      Rng rng(0);
      std::array<SyndromeArray, 2> out = {SyndromeArray(1, m),
                                          SyndromeArray(1, m)};
      auto e = PauliOperator::single(code.n_data(), q, p);
      sim.apply_to_frame(e);
      sim.run_round(NoiseParams{}, rng, out, 0);
      for (auto ty : {StabType::X, StabType::Z}) {
        const BitVec want = syndrome(code, e, ty);
        for (int k = 0; k < m; ++k)
          CHECK(out[static_cast<int>(ty)].get(0, k) == want.get(k));
      }
    }
  }
}

TEST_CASE("phenomenological rounds report the live frame syndrome exactly") {
  auto code = RscCode::build(5);
  FrameSimulator sim(code);
  Rng rng(77);
  const int T = 8;
  const int m = code.n_stabilizers(StabType::X);
  std::array<SyndromeArray, 2> out = {SyndromeArray(T, m),
                                      SyndromeArray(T, m)};
  NoiseParams params{0.08, 0.0, 0.0};  // storage only: outcomes are exact
  for (int t = 0; t < T; ++t) {
    sim.run_round(params, rng, out, t);
    const auto frame = sim.data_residual();
    for (auto ty : {StabType::X, StabType::Z}) {
      const BitVec want = syndrome(code, frame, ty);
      for (int k = 0; k < m; ++k)
        CHECK(out[static_cast<int>(ty)].get(t, k) == want.get(k));
    }
  }
}

TEST_CASE("labels are consistent with the residual") {
  auto code = RscCode::build(3);
  std::array<PureErrorTable, 2> tables = {
      build_pure_error_table(code, StabType::X),
      build_pure_error_table(code, StabType::Z)};
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto s = simulate_rounds(code, NoiseParams::standard(0.03), 3, seed);
    for (auto ty : {StabType::X, StabType::Z}) {
      const int ti = static_cast<int>(ty);
      CHECK(syndrome(code, s.residual, ty) == s.label_s[ti]);
      auto strip = combine_error(code, tables[ti], 0, s.label_s[ti]);
      CHECK(homology_class(code, s.residual * strip, ty) ==
            s.label_class[ti]);
    }
  }
}

TEST_CASE("determinism and per-sample substreams") {
  auto code = RscCode::build(3);
  auto params = NoiseParams::google();
  auto a = simulate_rounds(code, params, 3, 1234);
  auto b = simulate_rounds(code, params, 3, 1234);
  CHECK(a.syndromes[0].bits == b.syndromes[0].bits);
  CHECK(a.syndromes[1].bits == b.syndromes[1].bits);
  CHECK(a.residual == b.residual);

  auto ds = generate_dataset(code, params, 3, 16, 999);
  for (std::size_t i = 0; i < 16; ++i) {
    auto solo = simulate_rounds(code, params, 3, Rng::derive(999, i));
    CHECK(solo.syndromes[0].bits == ds.samples[i].syndromes[0].bits);
    CHECK(solo.syndromes[1].bits == ds.samples[i].syndromes[1].bits);
    CHECK(solo.residual == ds.samples[i].residual);
  }
}

TEST_CASE("presets carry the documented probabilities") {
  auto r = NoiseParams::reweighted();
  CHECK(r.p_storage == doctest::Approx(0.0024));
  CHECK(r.p_gate == doctest::Approx(0.0072));
  CHECK(r.p_meas == doctest::Approx(0.012));
  auto g = NoiseParams::google();
  CHECK(g.p_storage == doctest::Approx(0.004));
  CHECK(g.p_gate == doctest::Approx(0.005));
  CHECK(g.p_meas == doctest::Approx(0.018));
  CHECK(NoiseParams::phenomenological(0.01).p_gate == 0.0);
  CHECK(NoiseParams::standard(0.006).p_meas == doctest::Approx(0.006));
  CHECK_THROWS_AS(simulate_rounds(RscCode::build(3), NoiseParams{-0.1, 0, 0},
                                  3, 0),
                  std::invalid_argument);
}

TEST_CASE("single-fault enumeration predicts label syndrome rates") {
  // First-order oracle: every fault site fires independently, so
  // Pr[label_s != 0] = 1 - prod_sites (1 - p_relevant(site)), with residuals
  // derived by the independent schedule walk above.  Interactions and exact
  // cancellations are O(p^2).
  auto code = RscCode::build(3);
  const int T = 3;
  const double p = 0.01;
  auto params = NoiseParams::standard(p);

  double keep[3] = {1.0, 1.0, 1.0};  // no X-relevant / Z-relevant / any fault
  auto fold = [&](const PauliOperator& res, double pf) {
    const bool rx = syndrome(code, res, StabType::X).any();
    const bool rz = syndrome(code, res, StabType::Z).any();
    if (rx) keep[0] *= 1.0 - pf;
    if (rz) keep[1] *= 1.0 - pf;
    if (rx || rz) keep[2] *= 1.0 - pf;
  };
  for (int round = 0; round < T; ++round) {
    for (int q = 0; q < code.n_data(); ++q)
      for (Pauli pl : {Pauli::X, Pauli::Z, Pauli::Y})
        fold(storage_residual(code, q, pl), p / 3.0);
    for (auto ty : {StabType::X, StabType::Z})
      for (int k = 0; k < code.n_stabilizers(ty); ++k)
        for (int step = 0; step < 4; ++step) {
          if (code.schedule_qubit(ty, k, step) < 0) continue;
          for (int which = 1; which < 16; ++which)
            fold(gate_residual(code, ty, k, step,
                               static_cast<Pauli>(which >> 2),
                               static_cast<Pauli>(which & 3)),
                 p / 15.0);
        }
    // Measurement flips never touch the residual: nothing to fold.
  }
  const double predict[3] = {1 - keep[0], 1 - keep[1], 1 - keep[2]};

  const std::size_t n = 100000;
  std::size_t hit[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    auto s = simulate_rounds(code, params, T, Rng::derive(31337, i));
    const bool rx = s.label_s[0].any(), rz = s.label_s[1].any();
    hit[0] += rx;
    hit[1] += rz;
    hit[2] += rx || rz;
  }
  for (int j = 0; j < 3; ++j) {
    const double measured = static_cast<double>(hit[j]) / n;
    CAPTURE(j);
    CAPTURE(predict[j]);
    CAPTURE(measured);
    CHECK(std::abs(measured - predict[j]) <= 0.20 * predict[j]);
  }
}

TEST_CASE("circuit noise produces heavier detection events than phenomenological") {
  auto code = RscCode::build(3);
  const int T = 4;
  auto mean_hw = [&](const NoiseParams& params) {
    double total = 0;
    const std::size_t n = 4000;
    for (std::size_t i = 0; i < n; ++i) {
      auto s = simulate_rounds(code, params, T, Rng::derive(555, i));
      for (int ti = 0; ti < 2; ++ti) {
        auto d = s.syndromes[ti].detection_events();
        for (auto b : d) total += b;
      }
    }
    return total / (2.0 * n);
  };
  const double circuit = mean_hw(NoiseParams::standard(0.008));
  const double phen = mean_hw(NoiseParams::phenomenological(0.008));
  CHECK(circuit > phen);
}
