#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rscw/code.hpp"
#include "rscw/decoder.hpp"
#include "rscw/noise.hpp"

// Monte Carlo evaluation: logical-error-rate trajectories and syndrome
// Hamming-weight statistics.

namespace rscw {

// One LER measurement campaign.
struct RunConfig {
  int distance = 3;
  int rounds = 3;  // rounds per decode window (one QEC cycle)
  NoiseParams params = NoiseParams::standard(0.004);
  int trajectories = 400;
  std::uint64_t max_cycles = 1000000;  // censoring cap per trajectory
  std::uint64_t seed = 1;

  void validate() const;                      // throws on nonsense
  std::vector<std::string> warnings() const;  // soft advisories
};

struct TrajectoryResult {
  std::uint64_t cycles = 0;  // 1-based index of the failing cycle, or the cap
  bool failed = false;       // false = censored at max_cycles
  std::array<std::uint8_t, 2> fail_type{};  // which syndrome types failed
};

// Runs QEC cycles on one persistent Pauli frame: each cycle simulates
// `rounds` noisy extraction rounds continuing from the current residual,
// decodes the window, applies the correction, then declares failure when
// the syndrome-free part of the residual carries a nontrivial homology
// class in either type.  Noise for cycle c is drawn from the substream
// derived as (traj_seed, c), so the realization is identical for every
// decoder — corrections can never perturb the noise sampling.
TrajectoryResult run_trajectory(const RscCode& code,
                                const std::array<PureErrorTable, 2>& tables,
                                const NoiseParams& params, int rounds,
                                Decoder& decoder, std::uint64_t traj_seed,
                                std::uint64_t max_cycles);

// Aggregate over cfg.trajectories paired substreams (cfg.seed, index).
// tau_bar averages min(cycles, cap) over all trajectories, counting a
// censored trajectory at the cap as if it failed there: the reported rate
// 1/(rounds * tau_bar) is then a conservative upper bound of the
// uncensored estimate (a censored trajectory's true failure cycle can only
// be later).  The Wilson interval treats every trajectory end as a failure
// event over the total simulated cycles, so it brackets exactly the
// reported point estimate.
struct LerResult {
  RunConfig config;
  std::string decoder;
  std::uint64_t failures = 0;  // trajectories that genuinely failed
  std::uint64_t censored = 0;
  std::array<std::uint64_t, 2> type_failures{};
  std::uint64_t total_cycles = 0;
  double tau_bar = 0.0;
  double ler = 0.0;  // 1 / (rounds * tau_bar)
  double ci_low = 0.0, ci_high = 0.0;  // Wilson 95%, same 1/rounds scale
  bool upper_bound_only = false;       // no genuine failure observed
  std::vector<TrajectoryResult> trajectories;
};

LerResult estimate_ler(const RscCode& code, const RunConfig& cfg,
                       Decoder& decoder);

// Wilson score interval for a binomial proportion (z = 1.96 at 95%).
std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t trials, double z);

// CSV renderings; recomputing 1/(rounds * mean cycles) from the trajectory
// rows reproduces the summary's rate field exactly.
std::string trajectories_csv(const LerResult& r);
std::string summary_csv(const LerResult& r);

// --------------------------------------------------------------------------
// Syndrome Hamming-weight statistics.  One sample is one decoder input:
// the XOR-differenced detection events of a single syndrome type over a
// T-round window started from a clean frame.  Each simulated window yields
// two samples (one per type); the histogram counts samples by weight.
struct HammingStats {
  int distance = 0;
  int rounds = 0;
  NoiseParams params;
  std::uint64_t samples = 0;
  std::vector<std::uint64_t> histogram;  // index = detection-event weight
  double mean = 0.0;
  // First weight at or beyond the distribution mode whose empirical
  // probability falls below 1e-4 (bins past the histogram end count as 0).
  int tail_weight = 0;

  double probability(int w) const {
    return w >= 0 && w < static_cast<int>(histogram.size()) && samples
               ? static_cast<double>(histogram[w]) / static_cast<double>(samples)
               : 0.0;
  }
};

HammingStats hamming_stats(const RscCode& code, const NoiseParams& params,
                           int rounds, std::size_t n_samples,
                           std::uint64_t seed);

std::string histogram_csv(const HammingStats& h);

}  // namespace rscw
