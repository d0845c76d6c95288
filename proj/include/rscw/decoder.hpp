#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rscw/code.hpp"
#include "rscw/network.hpp"
#include "rscw/noise.hpp"
#include "rscw/quantize.hpp"

namespace rscw {

// A decode outcome: the data correction plus, per syndrome type, the
// (homology class, residual syndrome) it encodes — the same convention the
// sample labels use, so predictions and labels compare directly.
struct Decoded {
  PauliOperator correction;
  std::array<int, 2> class_bit{};
  std::array<BitVec, 2> s;
};

class Decoder {
 public:
  explicit Decoder(const RscCode& code);
  virtual ~Decoder() = default;
  virtual std::string name() const = 0;

  // Consumes the raw (cumulative) syndrome history of one decode window.
  Decoded decode(const std::array<SyndromeArray, 2>& syndromes);

  const RscCode& code() const { return code_; }

 protected:
  virtual PauliOperator correct(
      const std::array<SyndromeArray, 2>& syndromes) = 0;

  RscCode code_;
  std::array<PureErrorTable, 2> tables_;
};

// Produces the identity correction; the do-nothing baseline.
class NullDecoder : public Decoder {
 public:
  explicit NullDecoder(const RscCode& code) : Decoder(code) {}
  std::string name() const override { return "null"; }

 protected:
  PauliOperator correct(const std::array<SyndromeArray, 2>&) override {
    return PauliOperator::identity(code_.n_data());
  }
};

// Neural decoder: one network per syndrome type, float or int8 inference.
class MtlndDecoder : public Decoder {
 public:
  MtlndDecoder(const RscCode& code, NetworkSpec spec_x, Weights<float> w_x,
               NetworkSpec spec_z, Weights<float> w_z);
  MtlndDecoder(const RscCode& code, QuantizedNetwork q_x, QuantizedNetwork q_z);
  std::string name() const override {
    return quantized_ ? "mtlnd-int8" : "mtlnd-float";
  }
  const NetworkSpec& spec(StabType t) const {
    return specs_[static_cast<int>(t)];
  }

 protected:
  PauliOperator correct(const std::array<SyndromeArray, 2>& s) override;

 private:
  void check_specs() const;
  bool quantized_ = false;
  std::array<NetworkSpec, 2> specs_;
  std::array<Weights<float>, 2> weights_;
  std::array<QuantizedNetwork, 2> qnets_;
};

// Space metric of one type's detection graph: stabilizers are nodes, data
// qubits are unit edges (single-owner qubits connect to a shared boundary
// node), distances by BFS with deterministic parents, and path[i][j] is a
// data-qubit mask realizing dist[i][j] (it may route through the boundary).
struct MatchingGraph {
  StabType type = StabType::X;
  int n = 0;
  std::vector<std::vector<int>> dist;  // n x n
  std::vector<int> dist_b;             // node -> boundary
  std::vector<std::vector<BitVec>> path;
  std::vector<BitVec> path_b;
};

MatchingGraph build_matching_graph(const RscCode& code, StabType type);

// One matching problem: defects (round, stabilizer) in a T-round window.
struct DefectSet {
  int rounds = 0;
  std::vector<std::pair<int, int>> defects;
};

// mate[i] = partner index, or -1 for a boundary match.
struct MatchResult {
  int total_weight = 0;
  std::vector<int> mate;
};

// Pairing costs: |dt| + space distance for two defects; a lone defect exits
// through whichever is nearer of the space boundary and the open time
// boundary after the last round.
int defect_pair_weight(const MatchingGraph& g, const DefectSet& d, int i,
                       int j);
int defect_boundary_weight(const MatchingGraph& g, const DefectSet& d, int i);

// Exact minimum-weight matching by subset dynamic programming (defect count
// capped by the caller; 2^n states).
MatchResult match_defects_exact(const MatchingGraph& g, const DefectSet& d);
// Greedy fallback: repeatedly commits the globally cheapest remaining
// pairing.  Never beats the exact answer.
MatchResult match_defects_greedy(const MatchingGraph& g, const DefectSet& d);

struct MwpmConfig {
  int max_exact_defects = 20;  // beyond this, fall back to greedy
};

// Exact minimum-weight perfect-matching baseline over detection events.
class MwpmDecoder : public Decoder {
 public:
  explicit MwpmDecoder(const RscCode& code, MwpmConfig cfg = {});
  std::string name() const override { return "mwpm"; }
  const MatchingGraph& graph(StabType t) const {
    return graphs_[static_cast<int>(t)];
  }
  // Windows that exceeded the exact-DP defect cap and used the greedy path.
  std::uint64_t heuristic_windows() const { return heuristic_windows_; }

 protected:
  PauliOperator correct(const std::array<SyndromeArray, 2>& s) override;

 private:
  MwpmConfig cfg_;
  std::array<MatchingGraph, 2> graphs_;
  std::uint64_t heuristic_windows_ = 0;
};

// Exhaustive per-key majority table for distance 3: the key is the full
// raw syndrome bit string of one type across the window.
struct L3Lut {
  int distance = 3;
  int rounds = 3;
  std::uint8_t preset_id = 0;  // provenance tag used by the file format
  struct Entry {
    std::uint8_t class_bit = 0;
    std::uint8_t s = 0;        // packed per-type syndrome bits
    std::uint32_t count = 0;   // samples observed with this key
  };
  std::array<std::vector<Entry>, 2> table;  // size 2^(rounds * stabs)
};

std::uint32_t lut_key(const SyndromeArray& syn);

// Majority-vote construction from simulator samples (ties resolved toward
// the lexicographically smallest (class, s)).
L3Lut build_l3_lut(const RscCode& code, const NoiseParams& params, int T,
                   std::size_t n_samples, std::uint64_t seed);

class LutDecoder : public Decoder {
 public:
  LutDecoder(const RscCode& code, L3Lut lut);
  std::string name() const override { return "lut"; }
  const L3Lut& lut() const { return lut_; }

 protected:
  PauliOperator correct(const std::array<SyndromeArray, 2>& s) override;

 private:
  L3Lut lut_;
};

}  // namespace rscw
