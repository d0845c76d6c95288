#include "rscw/harness.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rscw/rng.hpp"

namespace rscw {

void RunConfig::validate() const {
  if (distance < 3 || distance > 15 || distance % 2 == 0)
    throw std::invalid_argument("distance must be odd and within 3..15");
  if (rounds < 1) throw std::invalid_argument("rounds must be positive");
  if (trajectories < 1)
    throw std::invalid_argument("at least one trajectory is required");
  if (max_cycles < 1)
    throw std::invalid_argument("max_cycles must be positive");
  params.validate();
}

std::vector<std::string> RunConfig::warnings() const {
  std::vector<std::string> w;
  if (trajectories < 400)
    w.push_back("fewer than 400 trajectories; estimates will be coarse");
  if (rounds < distance || rounds > 2 * distance)
    w.push_back("window of " + std::to_string(rounds) +
                " rounds is outside the customary [L, 2L] band for L=" +
                std::to_string(distance));
  return w;
}

TrajectoryResult run_trajectory(const RscCode& code,
                                const std::array<PureErrorTable, 2>& tables,
                                const NoiseParams& params, int rounds,
                                Decoder& decoder, std::uint64_t traj_seed,
                                std::uint64_t max_cycles) {
  FrameSimulator fs(code);
  const int m = code.n_stabilizers(StabType::X);
  LabeledSample probe;
  for (std::uint64_t cycle = 1; cycle <= max_cycles; ++cycle) {
    Rng rng(Rng::derive(traj_seed, cycle));
    std::array<SyndromeArray, 2> syn = {SyndromeArray(rounds, m),
                                        SyndromeArray(rounds, m)};
    for (int t = 0; t < rounds; ++t) fs.run_round(params, rng, syn, t);
    const Decoded d = decoder.decode(syn);
    fs.apply_to_frame(d.correction);
    probe.residual = fs.data_residual();
    label_residual(code, tables, probe);
    if (probe.label_class[0] || probe.label_class[1]) {
      TrajectoryResult r;
      r.cycles = cycle;
      r.failed = true;
      r.fail_type = {static_cast<std::uint8_t>(probe.label_class[0]),
                     static_cast<std::uint8_t>(probe.label_class[1])};
      return r;
    }
  }
  TrajectoryResult r;
  r.cycles = max_cycles;
  r.failed = false;
  return r;
}

std::pair<double, double> wilson_interval(std::uint64_t successes,
                                          std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

LerResult estimate_ler(const RscCode& code, const RunConfig& cfg,
                       Decoder& decoder) {
  cfg.validate();
  if (code.distance() != cfg.distance)
    throw std::invalid_argument("code distance does not match the run config");
  const std::array<PureErrorTable, 2> tables = {
      build_pure_error_table(code, StabType::X),
      build_pure_error_table(code, StabType::Z)};
  LerResult r;
  r.config = cfg;
  r.decoder = decoder.name();
  for (int i = 0; i < cfg.trajectories; ++i) {
    auto t = run_trajectory(code, tables, cfg.params, cfg.rounds, decoder,
                            Rng::derive(cfg.seed, static_cast<std::uint64_t>(i)),
                            cfg.max_cycles);
    r.total_cycles += t.cycles;
    if (t.failed) {
      ++r.failures;
      r.type_failures[0] += t.fail_type[0];
      r.type_failures[1] += t.fail_type[1];
    } else {
      ++r.censored;
    }
    r.trajectories.push_back(t);
  }
  const auto n = static_cast<std::uint64_t>(cfg.trajectories);
  r.tau_bar = static_cast<double>(r.total_cycles) / static_cast<double>(n);
  r.ler = 1.0 / (static_cast<double>(cfg.rounds) * r.tau_bar);
  const auto [lo, hi] = wilson_interval(n, r.total_cycles, 1.959963984540054);
  r.ci_low = lo / static_cast<double>(cfg.rounds);
  r.ci_high = hi / static_cast<double>(cfg.rounds);
  r.upper_bound_only = r.failures == 0;
  return r;
}

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string trajectories_csv(const LerResult& r) {
  std::string out = "trajectory,cycles,failed,failed_x,failed_z\n";
  for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
    const auto& t = r.trajectories[i];
    out += std::to_string(i) + ',' + std::to_string(t.cycles) + ',' +
           std::to_string(t.failed ? 1 : 0) + ',' +
           std::to_string(t.fail_type[0]) + ',' +
           std::to_string(t.fail_type[1]) + '\n';
  }
  return out;
}

std::string summary_csv(const LerResult& r) {
  std::string out =
      "decoder,distance,rounds,p_storage,p_gate,p_meas,trajectories,"
      "failures,censored,failed_x,failed_z,total_cycles,tau_bar,ler,"
      "ci_low,ci_high,upper_bound_only\n";
  out += r.decoder + ',' + std::to_string(r.config.distance) + ',' +
         std::to_string(r.config.rounds) + ',' +
         fmt_double(r.config.params.p_storage) + ',' +
         fmt_double(r.config.params.p_gate) + ',' +
         fmt_double(r.config.params.p_meas) + ',' +
         std::to_string(r.config.trajectories) + ',' +
         std::to_string(r.failures) + ',' + std::to_string(r.censored) + ',' +
         std::to_string(r.type_failures[0]) + ',' +
         std::to_string(r.type_failures[1]) + ',' +
         std::to_string(r.total_cycles) + ',' + fmt_double(r.tau_bar) + ',' +
         fmt_double(r.ler) + ',' + fmt_double(r.ci_low) + ',' +
         fmt_double(r.ci_high) + ',' +
         std::to_string(r.upper_bound_only ? 1 : 0) + '\n';
  return out;
}

HammingStats hamming_stats(const RscCode& code, const NoiseParams& params,
                           int rounds, std::size_t n_samples,
                           std::uint64_t seed) {
  params.validate();
  if (rounds < 1) throw std::invalid_argument("rounds must be positive");
  if (n_samples < 1) throw std::invalid_argument("need at least one sample");
  HammingStats h;
  h.distance = code.distance();
  h.rounds = rounds;
  h.params = params;
  h.samples = n_samples;
  const int m = code.n_stabilizers(StabType::X);
  FrameSimulator fs(code);
  std::uint64_t weight_sum = 0;
  // One draw = one decoder input: the detection events of a single syndrome
  // type over the window.  Each simulated window yields one X draw and one Z
  // draw, so n_samples draws need ceil(n_samples / 2) windows.
  const std::size_t windows = (n_samples + 1) / 2;
  std::size_t drawn = 0;
  for (std::size_t i = 0; i < windows; ++i) {
    fs.reset();
    Rng rng = Rng::substream(seed, i);
    std::array<SyndromeArray, 2> syn = {SyndromeArray(rounds, m),
                                        SyndromeArray(rounds, m)};
    for (int t = 0; t < rounds; ++t) fs.run_round(params, rng, syn, t);
    for (const auto& s : syn) {
      if (drawn == n_samples) break;
      std::size_t w = 0;
      for (auto b : s.detection_events()) w += b;
      if (w >= h.histogram.size()) h.histogram.resize(w + 1, 0);
      ++h.histogram[w];
      weight_sum += w;
      ++drawn;
    }
  }
  h.mean = static_cast<double>(weight_sum) / static_cast<double>(n_samples);
  std::size_t mode = 0;
  for (std::size_t w = 0; w < h.histogram.size(); ++w)
    if (h.histogram[w] > h.histogram[mode]) mode = w;
  h.tail_weight = static_cast<int>(h.histogram.size());
  for (std::size_t w = mode; w < h.histogram.size(); ++w) {
    if (static_cast<double>(h.histogram[w]) <
        1e-4 * static_cast<double>(n_samples)) {
      h.tail_weight = static_cast<int>(w);
      break;
    }
  }
  return h;
}

std::string histogram_csv(const HammingStats& h) {
  std::string out = "weight,count,probability\n";
  for (std::size_t w = 0; w < h.histogram.size(); ++w)
    out += std::to_string(w) + ',' + std::to_string(h.histogram[w]) + ',' +
           fmt_double(h.probability(static_cast<int>(w))) + '\n';
  return out;
}

}  // namespace rscw
