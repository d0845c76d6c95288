#include "rscw/decoder.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <limits>
#include <queue>
#include <stdexcept>

#include "rscw/rng.hpp"

namespace rscw {

Decoder::Decoder(const RscCode& code)
    : code_(code),
      tables_{build_pure_error_table(code, StabType::X),
              build_pure_error_table(code, StabType::Z)} {}

Decoded Decoder::decode(const std::array<SyndromeArray, 2>& syndromes) {
  for (int ti = 0; ti < 2; ++ti) {
    if (syndromes[ti].rounds < 1)
      throw std::invalid_argument("decode window needs at least one round");
    if (syndromes[ti].n_stab !=
        code_.n_stabilizers(static_cast<StabType>(ti)))
      throw std::invalid_argument("syndrome width does not match the code");
    if (syndromes[ti].rounds != syndromes[0].rounds)
      throw std::invalid_argument("syndrome types disagree on round count");
  }
  Decoded d;
  d.correction = correct(syndromes);
  for (auto ty : {StabType::X, StabType::Z}) {
    const int ti = static_cast<int>(ty);
    d.s[ti] = syndrome(code_, d.correction, ty);
    const auto strip = combine_error(code_, tables_[ti], 0, d.s[ti]);
    d.class_bit[ti] = homology_class(code_, d.correction * strip, ty);
  }
  return d;
}

// ---------------------------------------------------------------------------
// Neural decoder

MtlndDecoder::MtlndDecoder(const RscCode& code, NetworkSpec spec_x,
                           Weights<float> w_x, NetworkSpec spec_z,
                           Weights<float> w_z)
    : Decoder(code),
      quantized_(false),
      specs_{std::move(spec_x), std::move(spec_z)},
      weights_{std::move(w_x), std::move(w_z)} {
  check_specs();
}

MtlndDecoder::MtlndDecoder(const RscCode& code, QuantizedNetwork q_x,
                           QuantizedNetwork q_z)
    : Decoder(code),
      quantized_(true),
      specs_{q_x.spec, q_z.spec},
      qnets_{std::move(q_x), std::move(q_z)} {
  check_specs();
}

void MtlndDecoder::check_specs() const {
  for (auto ty : {StabType::X, StabType::Z}) {
    const int ti = static_cast<int>(ty);
    const auto& spec = specs_[ti];
    spec.validate();
    if (spec.type != ty)
      throw std::invalid_argument("network syndrome type mismatch");
    auto [h, w] = code_.grid_shape(ty);
    if (spec.input[1] != h || spec.input[2] != w)
      throw std::invalid_argument("network grid does not match the code");
    if (spec.syndrome_bits() != code_.n_stabilizers(ty))
      throw std::invalid_argument("network piece widths do not cover the "
                                  "syndrome");
  }
}

PauliOperator MtlndDecoder::correct(
    const std::array<SyndromeArray, 2>& syndromes) {
  PauliOperator corr = PauliOperator::identity(code_.n_data());
  for (auto ty : {StabType::X, StabType::Z}) {
    const int ti = static_cast<int>(ty);
    const auto& spec = specs_[ti];
    if (syndromes[ti].rounds != spec.input[0])
      throw std::invalid_argument("window length does not match the network");
    VecX<float> x = syndrome_to_input<float>(code_, syndromes[ti], ty);
    std::pair<int, BitVec> pred =
        quantized_
            ? prediction_from_qlogits(spec, forward_quantized(qnets_[ti], x))
            : prediction_from_logits(spec, forward(spec, weights_[ti], x));
    corr *= combine_error(code_, tables_[ti], pred.first, pred.second);
  }
  return corr;
}

// ---------------------------------------------------------------------------
// Matching baseline

MatchingGraph build_matching_graph(const RscCode& code, StabType type) {
  MatchingGraph g;
  g.type = type;
  g.n = code.n_stabilizers(type);
  const int n_data = code.n_data();
  const auto& stabs = code.stabilizers(type);

  std::vector<std::vector<int>> owners(n_data);
  for (int k = 0; k < g.n; ++k)
    for (int q : stabs[k].qubits) owners[q].push_back(k);

  // Node g.n is the shared boundary.  Adjacency sorted by (neighbor, qubit)
  // so breadth-first parents are deterministic.
  const int boundary = g.n;
  std::vector<std::vector<std::pair<int, int>>> adj(g.n + 1);
  for (int q = 0; q < n_data; ++q) {
    if (owners[q].size() == 2) {
      adj[owners[q][0]].push_back({owners[q][1], q});
      adj[owners[q][1]].push_back({owners[q][0], q});
    } else if (owners[q].size() == 1) {
      adj[owners[q][0]].push_back({boundary, q});
      adj[boundary].push_back({owners[q][0], q});
    }
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  g.dist.assign(g.n, std::vector<int>(g.n, 0));
  g.dist_b.assign(g.n, 0);
  g.path.assign(g.n, std::vector<BitVec>(g.n));
  g.path_b.assign(g.n, BitVec());

  constexpr int kInf = std::numeric_limits<int>::max();
  for (int src = 0; src < g.n; ++src) {
    std::vector<int> dist(g.n + 1, kInf);
    std::vector<std::pair<int, int>> parent(g.n + 1, {-1, -1});
    std::queue<int> q;
    dist[src] = 0;
    q.push(src);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (auto [v, qubit] : adj[u]) {
        if (dist[v] != kInf) continue;
        dist[v] = dist[u] + 1;
        parent[v] = {u, qubit};
        q.push(v);
      }
    }
    auto walk = [&](int dst) {
      BitVec mask(n_data);
      for (int v = dst; v != src; v = parent[v].first)
        mask.flip(parent[v].second);
      return mask;
    };
    for (int dst = 0; dst < g.n; ++dst) {
      if (dist[dst] == kInf)
        throw std::logic_error("disconnected matching graph");
      g.dist[src][dst] = dist[dst];
      g.path[src][dst] = walk(dst);
    }
    g.dist_b[src] = dist[boundary];
    g.path_b[src] = walk(boundary);
  }
  return g;
}

int defect_pair_weight(const MatchingGraph& g, const DefectSet& d, int i,
                       int j) {
  const auto& [ti, ki] = d.defects[i];
  const auto& [tj, kj] = d.defects[j];
  return std::abs(ti - tj) + g.dist[ki][kj];
}

int defect_boundary_weight(const MatchingGraph& g, const DefectSet& d, int i) {
  const auto& [t, k] = d.defects[i];
  return std::min(g.dist_b[k], d.rounds - t);
}

MatchResult match_defects_exact(const MatchingGraph& g, const DefectSet& d) {
  const int n = static_cast<int>(d.defects.size());
  if (n == 0) return {0, {}};
  if (n > 24)
    throw std::invalid_argument("exact matching capped at 24 defects");
  std::vector<int> bw(n);
  std::vector<std::vector<int>> pw(n, std::vector<int>(n, 0));
  for (int i = 0; i < n; ++i) {
    bw[i] = defect_boundary_weight(g, d, i);
    for (int j = i + 1; j < n; ++j)
      pw[i][j] = pw[j][i] = defect_pair_weight(g, d, i, j);
  }
  const std::uint32_t full = (1u << n) - 1u;
  std::vector<int> f(static_cast<std::size_t>(full) + 1,
                     std::numeric_limits<int>::max());
  f[0] = 0;
  for (std::uint32_t s = 1; s <= full; ++s) {
    const int i = std::countr_zero(s);
    const std::uint32_t rest = s ^ (1u << i);
    int best = bw[i] + f[rest];
    for (std::uint32_t m = rest; m;) {
      const int j = std::countr_zero(m);
      m ^= 1u << j;
      best = std::min(best, pw[i][j] + f[rest ^ (1u << j)]);
    }
    f[s] = best;
  }
  MatchResult r;
  r.total_weight = f[full];
  r.mate.assign(n, -1);
  // Reconstruct deterministically: boundary first, then lowest partner.
  for (std::uint32_t s = full; s;) {
    const int i = std::countr_zero(s);
    const std::uint32_t rest = s ^ (1u << i);
    if (f[s] == bw[i] + f[rest]) {
      r.mate[i] = -1;
      s = rest;
      continue;
    }
    bool found = false;
    for (std::uint32_t m = rest; m;) {
      const int j = std::countr_zero(m);
      m ^= 1u << j;
      if (f[s] == pw[i][j] + f[rest ^ (1u << j)]) {
        r.mate[i] = j;
        r.mate[j] = i;
        s = rest ^ (1u << j);
        found = true;
        break;
      }
    }
    if (!found) throw std::logic_error("matching reconstruction failed");
  }
  return r;
}

MatchResult match_defects_greedy(const MatchingGraph& g, const DefectSet& d) {
  const int n = static_cast<int>(d.defects.size());
  MatchResult r;
  r.mate.assign(n, -2);
  int assigned = 0;
  while (assigned < n) {
    int best_i = -1, best_j = -1;
    int best_w = std::numeric_limits<int>::max();
    for (int i = 0; i < n; ++i) {
      if (r.mate[i] != -2) continue;
      const int wb = defect_boundary_weight(g, d, i);
      if (wb < best_w) {
        best_w = wb;
        best_i = i;
        best_j = -1;
      }
      for (int j = i + 1; j < n; ++j) {
        if (r.mate[j] != -2) continue;
        const int wp = defect_pair_weight(g, d, i, j);
        if (wp < best_w) {
          best_w = wp;
          best_i = i;
          best_j = j;
        }
      }
    }
    r.total_weight += best_w;
    if (best_j < 0) {
      r.mate[best_i] = -1;
      ++assigned;
    } else {
      r.mate[best_i] = best_j;
      r.mate[best_j] = best_i;
      assigned += 2;
    }
  }
  return r;
}

MwpmDecoder::MwpmDecoder(const RscCode& code, MwpmConfig cfg)
    : Decoder(code),
      cfg_(cfg),
      graphs_{build_matching_graph(code, StabType::X),
              build_matching_graph(code, StabType::Z)} {
  if (cfg_.max_exact_defects < 0 || cfg_.max_exact_defects > 24)
    throw std::invalid_argument("exact-defect cap must be in [0, 24]");
}

PauliOperator MwpmDecoder::correct(
    const std::array<SyndromeArray, 2>& syndromes) {
  PauliOperator corr = PauliOperator::identity(code_.n_data());
  for (auto ty : {StabType::X, StabType::Z}) {
    const int ti = static_cast<int>(ty);
    const auto& g = graphs_[ti];
    const auto events = syndromes[ti].detection_events();
    DefectSet ds;
    ds.rounds = syndromes[ti].rounds;
    for (int t = 0; t < syndromes[ti].rounds; ++t)
      for (int k = 0; k < syndromes[ti].n_stab; ++k)
        if (events[t * syndromes[ti].n_stab + k]) ds.defects.push_back({t, k});
    if (ds.defects.empty()) continue;
    MatchResult mr;
    if (static_cast<int>(ds.defects.size()) <= cfg_.max_exact_defects) {
      mr = match_defects_exact(g, ds);
    } else {
      ++heuristic_windows_;
      mr = match_defects_greedy(g, ds);
    }
    BitVec mask(code_.n_data());
    for (std::size_t i = 0; i < ds.defects.size(); ++i) {
      const auto& [t, k] = ds.defects[i];
      if (mr.mate[i] == -1) {
        // A tie between the space and time boundaries resolves to time
        // (no data correction).
        if (g.dist_b[k] < ds.rounds - t) mask ^= g.path_b[k];
      } else if (mr.mate[i] > static_cast<int>(i)) {
        mask ^= g.path[k][ds.defects[mr.mate[i]].second];
      }
    }
    if (ty == StabType::X)
      corr.z_bits ^= mask;
    else
      corr.x_bits ^= mask;
  }
  return corr;
}

// ---------------------------------------------------------------------------
// Distance-3 lookup table

std::uint32_t lut_key(const SyndromeArray& syn) {
  if (syn.rounds * syn.n_stab > 24)
    throw std::invalid_argument("lookup key wider than 24 bits");
  std::uint32_t key = 0;
  for (int t = 0; t < syn.rounds; ++t)
    for (int k = 0; k < syn.n_stab; ++k)
      if (syn.get(t, k)) key |= 1u << (t * syn.n_stab + k);
  return key;
}

L3Lut build_l3_lut(const RscCode& code, const NoiseParams& params, int T,
                   std::size_t n_samples, std::uint64_t seed) {
  if (code.distance() != 3)
    throw std::invalid_argument("lookup decoding is defined for distance 3");
  params.validate();
  if (T < 1) throw std::invalid_argument("round count must be positive");
  const int m = code.n_stabilizers(StabType::X);
  if (T * m > 24)
    throw std::invalid_argument("lookup key wider than 24 bits");
  if (n_samples == 0) throw std::invalid_argument("no samples requested");

  L3Lut lut;
  lut.rounds = T;
  const std::size_t n_keys = std::size_t{1} << (T * m);
  const std::size_t n_labels = std::size_t{2} << m;  // class x 2^m
  std::array<std::vector<std::uint32_t>, 2> counts;
  counts[0].assign(n_keys * n_labels, 0);
  counts[1].assign(n_keys * n_labels, 0);

  const std::array<PureErrorTable, 2> tables = {
      build_pure_error_table(code, StabType::X),
      build_pure_error_table(code, StabType::Z)};
  FrameSimulator sim(code);
  LabeledSample sample;
  for (std::size_t i = 0; i < n_samples; ++i) {
    // Mirrors the dataset stream: sample i comes from substream (seed, i).
    Rng rng(Rng::derive(seed, i));
    sim.reset();
    sample.syndromes = {SyndromeArray(T, m), SyndromeArray(T, m)};
    for (int t = 0; t < T; ++t)
      sim.run_round(params, rng, sample.syndromes, t);
    sample.residual = sim.data_residual();
    label_residual(code, tables, sample);
    for (int ti = 0; ti < 2; ++ti) {
      const std::uint32_t key = lut_key(sample.syndromes[ti]);
      std::uint32_t s_int = 0;
      for (int k = 0; k < m; ++k)
        if (sample.label_s[ti].get(k)) s_int |= 1u << k;
      counts[ti][key * n_labels +
                 static_cast<std::uint32_t>(sample.label_class[ti]) *
                     (n_labels / 2) +
                 s_int]++;
    }
  }

  for (int ti = 0; ti < 2; ++ti) {
    lut.table[ti].assign(n_keys, {});
    for (std::size_t key = 0; key < n_keys; ++key) {
      std::uint32_t best = 0, total = 0;
      std::uint8_t best_class = 0, best_s = 0;
      for (int cls = 0; cls < 2; ++cls)
        for (std::uint32_t s = 0; s < (n_labels / 2); ++s) {
          const std::uint32_t c =
              counts[ti][key * n_labels + cls * (n_labels / 2) + s];
          total += c;
          if (c > best) {
            best = c;
            best_class = static_cast<std::uint8_t>(cls);
            best_s = static_cast<std::uint8_t>(s);
          }
        }
      lut.table[ti][key] = {best_class, best_s, total};
    }
  }
  return lut;
}

LutDecoder::LutDecoder(const RscCode& code, L3Lut lut)
    : Decoder(code), lut_(std::move(lut)) {
  if (code.distance() != lut_.distance)
    throw std::invalid_argument("lookup table distance mismatch");
  const std::size_t n_keys =
      std::size_t{1} << (lut_.rounds * code.n_stabilizers(StabType::X));
  for (int ti = 0; ti < 2; ++ti)
    if (lut_.table[ti].size() != n_keys)
      throw std::invalid_argument("lookup table size mismatch");
}

PauliOperator LutDecoder::correct(
    const std::array<SyndromeArray, 2>& syndromes) {
  PauliOperator corr = PauliOperator::identity(code_.n_data());
  for (auto ty : {StabType::X, StabType::Z}) {
    const int ti = static_cast<int>(ty);
    if (syndromes[ti].rounds != lut_.rounds)
      throw std::invalid_argument("window length does not match the table");
    const int m = code_.n_stabilizers(ty);
    const auto& entry = lut_.table[ti][lut_key(syndromes[ti])];
    int class_bit = 0;
    BitVec s(m);
    if (entry.count > 0) {
      class_bit = entry.class_bit;
      for (int k = 0; k < m; ++k)
        if ((entry.s >> k) & 1) s.set(k);
    } else {
      // Unseen key: assume no logical flip and trust the final round.
      for (int k = 0; k < m; ++k)
        if (syndromes[ti].get(lut_.rounds - 1, k)) s.set(k);
    }
    corr *= combine_error(code_, tables_[ti], class_bit, s);
  }
  return corr;
}

}  // namespace rscw
