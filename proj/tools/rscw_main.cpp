// Command-line front end for the rotated-surface-code decoding workbench.
//
// Subcommands: sample, train, decode, bench-ler, hamming, npe-compile,
// npe-sim, allocate, export-lut.  Every long flag can also be supplied via a
// flat key=value config file (--config FILE) or an RSCW_<KEY> environment
// variable; explicit flags win over the environment, which wins over the
// file.  Exit codes: 0 success, 2 usage error, 1 runtime error.
#include <algorithm>
#include <cstdint>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rscw/config.hpp"
#include "rscw/decoder.hpp"
#include "rscw/harness.hpp"
#include "rscw/io.hpp"
#include "rscw/npe.hpp"
#include "rscw/rng.hpp"
#include "rscw/train.hpp"

namespace {

using namespace rscw;

// --- config plumbing --------------------------------------------------------

// The config file must be known before option defaults are bound, so the
// --config flag is scanned out of argv by hand; the CLI11 registration of the
// same flag below is only for help text and validation.
std::string scan_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

// --- shared flag groups ------------------------------------------------------

struct NoiseArgs {
  std::string preset = "standard";
  std::string model = "circuit";
  double p = 0.004;
  double p_storage = -1.0, p_gate = -1.0, p_meas = -1.0;
};

void add_noise_flags(CLI::App* s, NoiseArgs& a, const KvConfig& cfg) {
  a.preset = cfg.get_or("preset", a.preset);
  a.model = cfg.get_or("model", a.model);
  a.p = cfg.get_f64("p", a.p);
  a.p_storage = cfg.get_f64("p_storage", a.p_storage);
  a.p_gate = cfg.get_f64("p_gate", a.p_gate);
  a.p_meas = cfg.get_f64("p_meas", a.p_meas);
  s->add_option("--preset", a.preset,
                "noise preset: standard, reweighted, google")
      ->check(CLI::IsMember({"standard", "reweighted", "google"}));
  s->add_option("--model", a.model,
                "noise model: circuit, phenomenological")
      ->check(CLI::IsMember({"circuit", "phenomenological"}));
  s->add_option("--p", a.p, "physical error probability");
  s->add_option("--p-storage", a.p_storage, "override storage error rate");
  s->add_option("--p-gate", a.p_gate, "override two-qubit gate error rate");
  s->add_option("--p-meas", a.p_meas, "override measurement error rate");
}

NoiseParams resolve_noise(const NoiseArgs& a) {
  NoiseParams np;
  if (a.model == "phenomenological")
    np = NoiseParams::phenomenological(a.p);
  else if (a.preset == "reweighted")
    np = NoiseParams::reweighted();
  else if (a.preset == "google")
    np = NoiseParams::google();
  else
    np = NoiseParams::standard(a.p);
  if (a.p_storage >= 0.0) np.p_storage = a.p_storage;
  if (a.p_gate >= 0.0) np.p_gate = a.p_gate;
  if (a.p_meas >= 0.0) np.p_meas = a.p_meas;
  np.validate();
  return np;
}

struct DecoderArgs {
  std::string decoder = "mwpm";
  std::string weights_x, weights_z;
  std::string lut_path;
};

void add_decoder_flags(CLI::App* s, DecoderArgs& a, const KvConfig& cfg) {
  a.decoder = cfg.get_or("decoder", a.decoder);
  a.weights_x = cfg.get_or("weights_x", a.weights_x);
  a.weights_z = cfg.get_or("weights_z", a.weights_z);
  a.lut_path = cfg.get_or("lut", a.lut_path);
  s->add_option("--decoder", a.decoder,
                "decoder: mwpm, null, lut, mtlnd")
      ->check(CLI::IsMember({"mwpm", "null", "lut", "mtlnd"}));
  s->add_option("--weights-x", a.weights_x,
                "network file for the X-syndrome decoder (mtlnd)");
  s->add_option("--weights-z", a.weights_z,
                "network file for the Z-syndrome decoder (mtlnd)");
  s->add_option("--lut", a.lut_path, "lookup-table file (lut)");
}

std::unique_ptr<Decoder> make_decoder(const RscCode& code, int T,
                                      const DecoderArgs& a) {
  if (a.decoder == "null") return std::make_unique<NullDecoder>(code);
  if (a.decoder == "mwpm")
    return std::make_unique<MwpmDecoder>(code, MwpmConfig{});
  if (a.decoder == "lut") {
    if (a.lut_path.empty())
      throw std::runtime_error("--lut is required for the lut decoder");
    return std::make_unique<LutDecoder>(code, load_l3_lut(a.lut_path));
  }
  // mtlnd
  if (a.weights_x.empty() || a.weights_z.empty())
    throw std::runtime_error(
        "--weights-x and --weights-z are required for the mtlnd decoder");
  auto fx = load_network(a.weights_x);
  auto fz = load_network(a.weights_z);
  for (const auto* f : {&fx, &fz}) {
    if (f->distance != code.distance())
      throw std::runtime_error("network distance does not match --L");
    if (f->rounds != T)
      throw std::runtime_error("network round count does not match --T");
  }
  if (fx.spec.type != StabType::X || fz.spec.type != StabType::Z)
    throw std::runtime_error(
        "weights-x must hold an X-syndrome network and weights-z a Z one");
  if (fx.quantized != fz.quantized)
    throw std::runtime_error(
        "mtlnd needs both networks float or both quantized, not mixed");
  if (fx.quantized)
    return std::make_unique<MtlndDecoder>(code, fx.qnet, fz.qnet);
  return std::make_unique<MtlndDecoder>(code, fx.spec, fx.weights, fz.spec,
                                        fz.weights);
}

struct MachineArgs {
  int mau_count = 8;
  int mau_width = 16;
  int rf = 4096;
  int mem_latency = 2;
  double clock = 2.5e9;
};

void add_machine_flags(CLI::App* s, MachineArgs& a, const KvConfig& cfg) {
  a.mau_count = static_cast<int>(cfg.get_i64("mau_count", a.mau_count));
  a.mau_width = static_cast<int>(cfg.get_i64("mau_width", a.mau_width));
  a.rf = static_cast<int>(cfg.get_i64("rf", a.rf));
  a.mem_latency = static_cast<int>(cfg.get_i64("mem_latency", a.mem_latency));
  a.clock = cfg.get_f64("clock", a.clock);
  s->add_option("--mau-count", a.mau_count,
                "parallel multiply-accumulate units (power of two)");
  s->add_option("--mau-width", a.mau_width, "products folded per unit cycle");
  s->add_option("--rf", a.rf, "activation register-file entries");
  s->add_option("--mem-latency", a.mem_latency,
                "parameter-memory read latency in cycles");
  s->add_option("--clock", a.clock, "clock frequency in Hz");
}

NpeConfig machine_config(const MachineArgs& a) {
  NpeConfig c;
  c.mau_count = a.mau_count;
  c.mau_width = a.mau_width;
  c.register_file_size = a.rf;
  c.memory_read_latency_cycles = a.mem_latency;
  c.clock_frequency_hz = a.clock;
  c.validate();
  return c;
}

// --- small helpers -----------------------------------------------------------

void require_value(const std::string& v, const char* flag) {
  if (v.empty()) throw CLI::RequiredError(flag);
}

StabType parse_type(const std::string& s) {
  if (s == "x") return StabType::X;
  if (s == "z") return StabType::Z;
  throw std::runtime_error("type must be x or z");
}

NetworkFile load_quantized_network(const std::string& path) {
  auto f = load_network(path);
  if (!f.quantized)
    throw std::runtime_error(
        path + ": holds float parameters; the engine executes int8 networks "
               "(re-export with a quantized variant)");
  return f;
}

std::vector<std::int64_t> parse_i64_list(const std::string& s) {
  std::vector<std::int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(std::stoll(item));
  return out;
}

int argmax_i8(const std::vector<std::int8_t>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double ns_at(std::uint64_t cycles, double clock_hz) {
  return static_cast<double>(cycles) / clock_hz * 1e9;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    save_text(out_path, text);
}

// --- subcommand bodies -------------------------------------------------------

struct SampleArgs {
  int L = 3, T = -1, n = 10000;
  std::uint64_t seed = 1;
  NoiseArgs noise;
  std::string out;
};

void do_sample(const SampleArgs& a) {
  require_value(a.out, "--out");
  auto code = RscCode::build(a.L);
  const int T = a.T > 0 ? a.T : default_rounds(a.L);
  auto params = resolve_noise(a.noise);
  auto data = generate_dataset(code, params, T, a.n, a.seed);
  save_dataset(a.out, data);
  std::cout << "wrote " << data.samples.size() << " samples (L=" << a.L
            << ", T=" << T << ", p_storage=" << params.p_storage
            << ", p_gate=" << params.p_gate << ", p_meas=" << params.p_meas
            << ") to " << a.out << "\n";
}

struct TrainArgs {
  int L = 3, T = -1, n = 50000;
  std::uint64_t seed = 1;
  NoiseArgs noise;
  std::string data_path, out, quantized_out, types = "both";
  std::string optimizer = "adam";
  int epochs = 10, batch = 128, calibration = 512;
  double lr = 1e-3, val_fraction = 0.1;
  bool wide = false;
};

void do_train(const TrainArgs& a, bool explicit_L, bool explicit_T) {
  require_value(a.out, "--out");
  Dataset data;
  if (!a.data_path.empty()) {
    data = load_dataset(a.data_path);
    if (explicit_L && data.distance != a.L)
      throw std::runtime_error("--L conflicts with the dataset's distance");
    if (explicit_T && data.rounds != a.T)
      throw std::runtime_error("--T conflicts with the dataset's rounds");
  } else {
    const int T = a.T > 0 ? a.T : default_rounds(a.L);
    auto code = RscCode::build(a.L);
    data = generate_dataset(code, resolve_noise(a.noise), T, a.n, a.seed);
  }
  auto code = RscCode::build(data.distance);

  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.seed = a.seed;
  tc.val_fraction = a.val_fraction;
  tc.opt.lr = a.lr;
  tc.opt.kind = a.optimizer == "sgd" ? OptimizerConfig::Kind::SGD
                                     : OptimizerConfig::Kind::Adam;

  std::cout << "type,epoch,train_loss,val_loss,class_accuracy,mean_accuracy\n";
  for (auto type : {StabType::X, StabType::Z}) {
    const char tc_name = type == StabType::X ? 'x' : 'z';
    if (a.types != "both" && a.types[0] != tc_name) continue;
    auto spec = a.wide ? wide_spec(code, data.rounds, type)
                              : default_spec(code, data.rounds, type);
    auto batched = prepare_training_data(code, data, spec);
    tc.on_epoch = [&](const EpochStats& e) {
      const auto& acc = e.val_head_accuracy;
      const double mean =
          acc.empty()
              ? 0.0
              : std::accumulate(acc.begin(), acc.end(), 0.0) / acc.size();
      std::cout << tc_name << ',' << e.epoch << ',' << e.train_loss << ','
                << e.val_loss << ',' << (acc.empty() ? 0.0 : acc[0]) << ','
                << mean << "\n"
                << std::flush;
    };
    auto result = train(spec, batched, tc);

    NetworkFile f;
    f.distance = data.distance;
    f.rounds = data.rounds;
    f.quantized = false;
    f.spec = spec;
    f.weights = result.weights;
    save_network(a.out + "." + tc_name + ".mtlw", f);

    if (!a.quantized_out.empty()) {
      std::vector<VecX<float>> calib;
      const int n_cal =
          std::min<int>(a.calibration, static_cast<int>(batched.inputs.cols()));
      for (int i = 0; i < n_cal; ++i) calib.push_back(batched.inputs.col(i));
      NetworkFile q;
      q.distance = data.distance;
      q.rounds = data.rounds;
      q.quantized = true;
      q.spec = spec;
      q.qnet = quantize(spec, result.weights, calib);
      save_network(a.quantized_out + "." + tc_name + ".mtlw", q);
    }
  }
}

struct DecodeArgs {
  std::string data_path;
  DecoderArgs dec;
};

void do_decode(const DecodeArgs& a) {
  require_value(a.data_path, "--data");
  auto data = load_dataset(a.data_path);
  auto code = RscCode::build(data.distance);
  auto dec = make_decoder(code, data.rounds, a.dec);
  std::array<std::int64_t, 2> class_ok{}, s_ok{}, both_ok{};
  for (const auto& sample : data.samples) {
    auto d = dec->decode(sample.syndromes);
    for (int t = 0; t < 2; ++t) {
      const bool c = d.class_bit[t] == sample.label_class[t];
      const bool s = d.s[t] == sample.label_s[t];
      class_ok[t] += c;
      s_ok[t] += s;
      both_ok[t] += c && s;
    }
  }
  const double n = static_cast<double>(data.samples.size());
  std::cout << "type,samples,class_accuracy,residual_syndrome_accuracy,"
               "joint_accuracy\n";
  for (int t = 0; t < 2; ++t)
    std::cout << "xz"[t] << ',' << data.samples.size() << ','
              << class_ok[t] / n << ',' << s_ok[t] / n << ','
              << both_ok[t] / n << "\n";
}

struct BenchArgs {
  int L = 3, T = -1, trajectories = 400;
  std::uint64_t max_cycles = 1000000, seed = 1;
  NoiseArgs noise;
  DecoderArgs dec;
  std::string out;
};

void do_bench(const BenchArgs& a) {
  RunConfig cfg;
  cfg.distance = a.L;
  cfg.rounds = a.T > 0 ? a.T : default_rounds(a.L);
  cfg.params = resolve_noise(a.noise);
  cfg.trajectories = a.trajectories;
  cfg.max_cycles = a.max_cycles;
  cfg.seed = a.seed;
  cfg.validate();
  for (const auto& w : cfg.warnings()) std::cerr << "warning: " << w << "\n";
  auto code = RscCode::build(a.L);
  auto dec = make_decoder(code, cfg.rounds, a.dec);
  auto r = estimate_ler(code, cfg, *dec);
  if (r.upper_bound_only)
    std::cerr << "warning: no failure observed; the rate is an upper bound "
                 "set by the cycle cap\n";
  std::cout << summary_csv(r);
  if (!a.out.empty()) save_text(a.out, trajectories_csv(r));
}

struct HammingArgs {
  int L = 5, T = -1;
  std::uint64_t samples = 100000, seed = 1;
  NoiseArgs noise;
  std::string out;
};

void do_hamming(const HammingArgs& a) {
  auto code = RscCode::build(a.L);
  const int T = a.T > 0 ? a.T : default_rounds(a.L);
  auto h = hamming_stats(code, resolve_noise(a.noise), T,
                         static_cast<std::size_t>(a.samples), a.seed);
  std::cerr << "mean weight " << h.mean
            << "; first weight with probability < 1e-4: " << h.tail_weight
            << "\n";
  emit(a.out, histogram_csv(h));
}

struct NpeCompileArgs {
  std::string weights, out;
  MachineArgs machine;
};

void do_npe_compile(const NpeCompileArgs& a) {
  require_value(a.weights, "--weights");
  auto f = load_quantized_network(a.weights);
  auto cfg = machine_config(a.machine);
  auto prog = compile(f.spec, f.qnet, cfg);
  if (!a.out.empty()) save_npe_program(a.out, prog);
  std::cout << "segments,ma_issues,records,cycles,latency_ns\n"
            << prog.segments.size() << ',' << prog.issues.size() << ','
            << prog.stream.size() << ',' << prog.cycle_count << ','
            << ns_at(prog.cycle_count, cfg.clock_frequency_hz) << "\n";
}

struct NpeSimArgs {
  std::string weights, program_path, trace_path;
  std::vector<std::string> inputs;
  int random = 0;
  std::uint64_t seed = 1;
  double sm_period = -1.0;
  bool report = false;
  MachineArgs machine;
};

void do_npe_sim(const NpeSimArgs& a) {
  require_value(a.weights, "--weights");
  auto f = load_quantized_network(a.weights);
  NpeProgram prog;
  if (!a.program_path.empty())
    prog = load_npe_program(a.program_path, f.spec, f.qnet);
  else
    prog = compile(f.spec, f.qnet, machine_config(a.machine));

  const int volume = f.spec.input[0] * f.spec.input[1] * f.spec.input[2];
  std::vector<VecX<float>> xs;
  for (const auto& bits : a.inputs) {
    if (static_cast<int>(bits.size()) != volume)
      throw std::runtime_error("--input needs exactly " +
                               std::to_string(volume) + " bits");
    VecX<float> x(volume);
    for (int i = 0; i < volume; ++i) {
      if (bits[i] != '0' && bits[i] != '1')
        throw std::runtime_error("--input must be a string of 0/1 bits");
      x[i] = bits[i] == '1' ? 1.0f : 0.0f;
    }
    xs.push_back(std::move(x));
  }
  Rng rng(a.seed);
  for (int i = 0; i < a.random; ++i) {
    VecX<float> x(volume);
    for (int j = 0; j < volume; ++j) x[j] = rng.bernoulli(0.5) ? 1.0f : 0.0f;
    xs.push_back(std::move(x));
  }
  if (xs.empty()) xs.emplace_back(VecX<float>::Zero(volume));

  NpeRunResult last;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<NpeTraceEvent> trace;
    const bool want_trace = i == 0 && !a.trace_path.empty();
    last = simulate(prog, xs[i], want_trace ? &trace : nullptr);
    if (want_trace) save_text(a.trace_path, trace_to_csv(trace));
    for (std::size_t h = 0; h < last.logits.heads.size(); ++h) {
      std::cout << "input " << i << " head " << h << ": argmax "
                << argmax_i8(last.logits.heads[h]) << ", logits [";
      for (std::size_t k = 0; k < last.logits.heads[h].size(); ++k)
        std::cout << (k ? ", " : "")
                  << static_cast<int>(last.logits.heads[h][k]);
      std::cout << "]\n";
    }
  }
  if (a.report) {
    std::cout << "latency: " << last.cycles << " cycles, "
              << ns_at(last.cycles, prog.config.clock_frequency_hz)
              << " ns at " << prog.config.clock_frequency_hz / 1e9 << " GHz\n"
              << "external reference point: 67 cycles / 197 ns at 2.5 GHz "
                 "(reported for a comparable engine design; not asserted by "
                 "this tool)\n";
  }
  if (a.sm_period >= 0.0) {
    const double full =
        static_cast<double>(prog.cycle_count) / prog.config.clock_frequency_hz;
    const double piped =
        pipeline_latency_s(prog, a.sm_period, f.spec.input[0]);
    std::cout << "pipelined latency at measurement period " << a.sm_period
              << " s: " << piped * 1e9 << " ns (full: " << full * 1e9
              << " ns)\n";
  }
}

struct AllocateArgs {
  std::string m_list, alpha_list, weights;
  int C = 0;
};

void do_allocate(const AllocateArgs& a) {
  if (a.C <= 0) throw CLI::RequiredError("--C");
  std::vector<std::int64_t> M;
  std::vector<int> alpha;
  std::vector<std::string> names;
  if (!a.weights.empty()) {
    auto f = load_network(a.weights);
    auto ap = allocation_problem(f.spec);
    M = ap.M;
    alpha = ap.alpha;
    names = ap.names;
  } else {
    if (a.m_list.empty()) throw CLI::RequiredError("--M");
    M = parse_i64_list(a.m_list);
    if (!a.alpha_list.empty())
      for (auto v : parse_i64_list(a.alpha_list))
        alpha.push_back(static_cast<int>(v));
    else
      alpha.assign(M.size(), 1);
    for (std::size_t j = 0; j < M.size(); ++j)
      names.push_back("layer" + std::to_string(j));
  }
  auto alloc = allocate(M, alpha, a.C);
  std::cout << "name,mults,alpha,units,continuous_units,latency\n";
  for (std::size_t j = 0; j < M.size(); ++j)
    std::cout << names[j] << ',' << M[j] << ',' << alpha[j] << ','
              << alloc.units[j] << ',' << alloc.continuous[j] << ','
              << static_cast<double>(M[j]) / alloc.units[j] << "\n";
  std::cout << "total,,," << alloc.total << ",," << alloc.predicted_latency
            << "\n";
}

struct ExportLutArgs {
  std::string kind = "pure-error";
  int L = 3, T = 3;
  std::string type = "x", out;
  std::uint64_t samples = 200000, seed = 1;
  int preset_id = 0;
  NoiseArgs noise;
};

void do_export_lut(const ExportLutArgs& a) {
  require_value(a.out, "--out");
  if (a.kind == "pure-error") {
    auto code = RscCode::build(a.L);
    save_pure_error_table(a.out,
                          build_pure_error_table(code, parse_type(a.type)));
    std::cout << "wrote pure-error table (L=" << a.L << ", type=" << a.type
              << ") to " << a.out << "\n";
    return;
  }
  auto code = RscCode::build(3);
  auto lut = build_l3_lut(code, resolve_noise(a.noise), a.T,
                          static_cast<std::size_t>(a.samples), a.seed);
  lut.preset_id = static_cast<std::uint8_t>(a.preset_id);
  save_l3_lut(a.out, lut);
  std::cout << "wrote distance-3 lookup table (" << a.samples
            << " training samples) to " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotated-surface-code decoding workbench"};
  app.require_subcommand(1);

  std::string config_path = scan_config_path(argc, argv);
  KvConfig cfg;
  int rc = 0;

  SampleArgs sample;
  TrainArgs train_args;
  DecodeArgs decode;
  BenchArgs bench;
  HammingArgs hamming;
  NpeCompileArgs ncomp;
  NpeSimArgs nsim;
  AllocateArgs alloc;
  ExportLutArgs elut;
  CLI::App *s_train = nullptr;

  try {
    if (!config_path.empty()) cfg = KvConfig::from_file(config_path);
    cfg.apply_environment();

    auto add_config_flag = [&](CLI::App* s) {
      std::string& sink = config_path;
      s->add_option("--config", sink, "key=value config file");
    };

    {
      auto* s = app.add_subcommand("sample",
                                   "generate a labeled syndrome dataset");
      sample.L = static_cast<int>(cfg.get_i64("l", sample.L));
      sample.T = static_cast<int>(cfg.get_i64("t", sample.T));
      sample.n = static_cast<int>(cfg.get_i64("n", sample.n));
      sample.seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 1));
      sample.out = cfg.get_or("out", sample.out);
      s->add_option("--L", sample.L, "code distance (odd, 3..15)");
      s->add_option("--T", sample.T, "rounds per window (default: per-L)");
      s->add_option("--n", sample.n, "number of samples");
      s->add_option("--seed", sample.seed, "random seed");
      s->add_option("--out", sample.out, "output dataset file");
      add_noise_flags(s, sample.noise, cfg);
      add_config_flag(s);
      s->callback([&] { do_sample(sample); });
    }
    {
      auto* s = app.add_subcommand("train", "train syndrome-decoding networks");
      s_train = s;
      train_args.L = static_cast<int>(cfg.get_i64("l", train_args.L));
      train_args.T = static_cast<int>(cfg.get_i64("t", train_args.T));
      train_args.n = static_cast<int>(cfg.get_i64("n", train_args.n));
      train_args.seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 1));
      train_args.data_path = cfg.get_or("data", train_args.data_path);
      train_args.out = cfg.get_or("out", train_args.out);
      train_args.quantized_out =
          cfg.get_or("quantized_out", train_args.quantized_out);
      train_args.types = cfg.get_or("type", train_args.types);
      train_args.optimizer = cfg.get_or("optimizer", train_args.optimizer);
      train_args.epochs = static_cast<int>(cfg.get_i64("epochs", 10));
      train_args.batch = static_cast<int>(cfg.get_i64("batch", 128));
      train_args.calibration =
          static_cast<int>(cfg.get_i64("calibration", 512));
      train_args.lr = cfg.get_f64("lr", train_args.lr);
      train_args.val_fraction =
          cfg.get_f64("val_fraction", train_args.val_fraction);
      train_args.wide = cfg.get_bool("wide", false);
      s->add_option("--L", train_args.L, "code distance");
      s->add_option("--T", train_args.T, "rounds per window");
      s->add_option("--n", train_args.n, "samples to generate when no --data");
      s->add_option("--seed", train_args.seed, "random seed");
      s->add_option("--data", train_args.data_path, "existing dataset file");
      s->add_option("--out", train_args.out,
                    "output prefix; writes PREFIX.x.mtlw / PREFIX.z.mtlw");
      s->add_option("--quantized-out", train_args.quantized_out,
                    "also export int8 networks under this prefix");
      s->add_option("--type", train_args.types, "train x, z, or both")
          ->check(CLI::IsMember({"x", "z", "both"}));
      s->add_option("--optimizer", train_args.optimizer, "adam or sgd")
          ->check(CLI::IsMember({"adam", "sgd"}));
      s->add_option("--epochs", train_args.epochs, "training epochs");
      s->add_option("--batch", train_args.batch, "mini-batch size");
      s->add_option("--calibration", train_args.calibration,
                    "calibration samples for quantization");
      s->add_option("--lr", train_args.lr, "learning rate");
      s->add_option("--val-fraction", train_args.val_fraction,
                    "fraction of data held out for validation");
      s->add_flag("--wide", train_args.wide,
                  "use the wide network variant");
      add_noise_flags(s, train_args.noise, cfg);
      add_config_flag(s);
      s->callback([&] {
        do_train(train_args, s_train->count("--L") > 0,
                 s_train->count("--T") > 0);
      });
    }
    {
      auto* s = app.add_subcommand(
          "decode", "measure label accuracy of a decoder on a dataset");
      decode.data_path = cfg.get_or("data", decode.data_path);
      s->add_option("--data", decode.data_path, "dataset file");
      add_decoder_flags(s, decode.dec, cfg);
      add_config_flag(s);
      s->callback([&] { do_decode(decode); });
    }
    {
      auto* s = app.add_subcommand(
          "bench-ler", "Monte Carlo logical-error-rate measurement");
      bench.L = static_cast<int>(cfg.get_i64("l", bench.L));
      bench.T = static_cast<int>(cfg.get_i64("t", bench.T));
      bench.trajectories =
          static_cast<int>(cfg.get_i64("trajectories", bench.trajectories));
      bench.max_cycles = static_cast<std::uint64_t>(
          cfg.get_i64("max_cycles", static_cast<std::int64_t>(1000000)));
      bench.seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 1));
      bench.out = cfg.get_or("out", bench.out);
      s->add_option("--L", bench.L, "code distance");
      s->add_option("--T", bench.T, "rounds per decode window");
      s->add_option("--trajectories", bench.trajectories,
                    "trajectories to run (fewer than 400 warns)");
      s->add_option("--max-cycles", bench.max_cycles,
                    "censoring cap per trajectory");
      s->add_option("--seed", bench.seed, "random seed");
      s->add_option("--out", bench.out, "write per-trajectory CSV here");
      add_noise_flags(s, bench.noise, cfg);
      add_decoder_flags(s, bench.dec, cfg);
      add_config_flag(s);
      s->callback([&] { do_bench(bench); });
    }
    {
      auto* s = app.add_subcommand(
          "hamming", "detection-event weight histogram of the noise model");
      hamming.L = static_cast<int>(cfg.get_i64("l", hamming.L));
      hamming.T = static_cast<int>(cfg.get_i64("t", hamming.T));
      hamming.samples =
          static_cast<std::uint64_t>(cfg.get_i64("samples", 100000));
      hamming.seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 1));
      hamming.out = cfg.get_or("out", hamming.out);
      s->add_option("--L", hamming.L, "code distance");
      s->add_option("--T", hamming.T, "rounds per window");
      s->add_option("--samples", hamming.samples, "windows to sample");
      s->add_option("--seed", hamming.seed, "random seed");
      s->add_option("--out", hamming.out,
                    "histogram CSV file (default: stdout)");
      add_noise_flags(s, hamming.noise, cfg);
      add_config_flag(s);
      s->callback([&] { do_hamming(hamming); });
    }
    {
      auto* s = app.add_subcommand(
          "npe-compile", "lower an int8 network onto the engine");
      ncomp.weights = cfg.get_or("weights", ncomp.weights);
      ncomp.out = cfg.get_or("out", ncomp.out);
      s->add_option("--weights", ncomp.weights, "quantized network file");
      s->add_option("--out", ncomp.out, "program output file");
      add_machine_flags(s, ncomp.machine, cfg);
      add_config_flag(s);
      s->callback([&] { do_npe_compile(ncomp); });
    }
    {
      auto* s = app.add_subcommand(
          "npe-sim", "cycle-accurate execution of a compiled network");
      nsim.weights = cfg.get_or("weights", nsim.weights);
      nsim.program_path = cfg.get_or("program", nsim.program_path);
      nsim.trace_path = cfg.get_or("trace", nsim.trace_path);
      nsim.random = static_cast<int>(cfg.get_i64("random", nsim.random));
      nsim.seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 1));
      nsim.sm_period = cfg.get_f64("sm_period", nsim.sm_period);
      nsim.report = cfg.get_bool("report", false);
      s->add_option("--weights", nsim.weights, "quantized network file");
      s->add_option("--program", nsim.program_path,
                    "compiled program (default: compile now)");
      s->add_option("--trace", nsim.trace_path,
                    "write the first input's pipeline trace CSV here");
      s->add_option("--input", nsim.inputs,
                    "syndrome window as a 0/1 bit string (repeatable)");
      s->add_option("--random", nsim.random, "also run N random inputs");
      s->add_option("--seed", nsim.seed, "seed for --random");
      s->add_option("--sm-period", nsim.sm_period,
                    "measurement period in seconds: report the pipelined "
                    "latency with syndrome rounds arriving at this cadence");
      s->add_flag("--report", nsim.report,
                  "print cycle count and wall time at the configured clock");
      add_machine_flags(s, nsim.machine, cfg);
      add_config_flag(s);
      s->callback([&] { do_npe_sim(nsim); });
    }
    {
      auto* s = app.add_subcommand(
          "allocate", "optimal unit split across layers for a cycle budget");
      alloc.m_list = cfg.get_or("m", alloc.m_list);
      alloc.alpha_list = cfg.get_or("alpha", alloc.alpha_list);
      alloc.weights = cfg.get_or("weights", alloc.weights);
      alloc.C = static_cast<int>(cfg.get_i64("c", alloc.C));
      s->add_option("--M", alloc.m_list,
                    "comma-separated multiply counts per layer");
      s->add_option("--alpha", alloc.alpha_list,
                    "comma-separated layer multiplicities (default: all 1)");
      s->add_option("--weights", alloc.weights,
                    "derive the layer list from a network file instead");
      s->add_option("--C", alloc.C, "total unit budget");
      add_config_flag(s);
      s->callback([&] { do_allocate(alloc); });
    }
    {
      auto* s = app.add_subcommand("export-lut",
                                   "write decoder lookup artifacts");
      elut.kind = cfg.get_or("kind", elut.kind);
      elut.L = static_cast<int>(cfg.get_i64("l", elut.L));
      elut.T = static_cast<int>(cfg.get_i64("t", elut.T));
      elut.type = cfg.get_or("type", elut.type);
      elut.out = cfg.get_or("out", elut.out);
      elut.samples = static_cast<std::uint64_t>(cfg.get_i64("samples", 200000));
      elut.seed = static_cast<std::uint64_t>(cfg.get_i64("seed", 1));
      elut.preset_id = static_cast<int>(cfg.get_i64("preset_id", 0));
      s->add_option("--kind", elut.kind, "pure-error or l3")
          ->check(CLI::IsMember({"pure-error", "l3"}));
      s->add_option("--L", elut.L, "code distance (pure-error)");
      s->add_option("--T", elut.T, "rounds (l3; must be 3)");
      s->add_option("--type", elut.type, "x or z (pure-error)")
          ->check(CLI::IsMember({"x", "z"}));
      s->add_option("--out", elut.out, "output file");
      s->add_option("--samples", elut.samples, "training samples (l3)");
      s->add_option("--seed", elut.seed, "random seed (l3)");
      s->add_option("--preset-id", elut.preset_id,
                    "noise-preset tag stored in the file (l3)");
      add_noise_flags(s, elut.noise, cfg);
      add_config_flag(s);
      s->callback([&] { do_export_lut(elut); });
    }

    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
