#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rscw/quantize.hpp"

namespace rscw {

// Machine parameters of one decoding engine.  The compute core is c
// multiply-add units (each folding mau_width products per cycle), a
// log2(c)-deep pipelined adder tree with result taps at every depth, and a
// special-function stage that accumulates chunk partials and applies
// bias / activation / rescale / quantize.  Stage timings: MA one cycle, the
// adder tree one cycle per tapped level, SF one cycle; parameter-memory
// reads take memory_read_latency_cycles and are issued on the memory slot.
struct NpeConfig {
  int mau_count = 8;    // c; must be a power of two
  int mau_width = 16;   // products folded inside one MAU per cycle
  int register_file_size = 4096;  // int8 activation entries
  int memory_read_latency_cycles = 2;
  double clock_frequency_hz = 2.5e9;

  int adder_tree_depth() const;  // log2(mau_count)
  void validate() const;
};

// ---------------------------------------------------------------------------
// Resource allocation across layers

// Integer unit partition: layer j owns units[j] parallel units, replicated
// alpha[j] times, spending sum(alpha_j * units_j) = total; the objective is
// predicted_latency = sum(alpha_j * M_j / units_j).
struct Allocation {
  std::vector<int> units;
  std::vector<int> alpha;
  int total = 0;
  std::vector<double> continuous;  // real-valued optimum before integering
  double predicted_latency = 0.0;
};

// Stationary point of the Lagrangian: C_j = C * sqrt(M_j) / sum_i alpha_i *
// sqrt(M_i).
std::vector<double> closed_form_allocation(const std::vector<std::int64_t>& M,
                                           const std::vector<int>& alpha,
                                           int C);

// Exact constrained optimum: continuous part solved independently of the
// closed form (monotone search on the Lagrange multiplier), integer part by
// dynamic programming over exact budget consumption.  Throws on an
// infeasible budget (no integer solution with every layer at >= 1 unit).
Allocation allocate(const std::vector<std::int64_t>& M,
                    const std::vector<int>& alpha, int C);

// The network's allocation problem: one entry per distinct layer shape
// (convs..., feature FC, head hidden, head output) with multiplicities
// (1 for frontend layers, head count for head layers) and per-instance
// multiply counts.
struct AllocationProblem {
  std::vector<std::int64_t> M;
  std::vector<int> alpha;
  std::vector<std::string> names;
};
AllocationProblem allocation_problem(const NetworkSpec& spec);

// ---------------------------------------------------------------------------
// Program representation

// Bundle kinds.  One record is one issue slot pair: the compute fields are
// (opcode kind, tap, d0..d2), the memory fields are (ra, rb, maddr); NOP
// burns the cycle, LayerBegin is a zero-cycle stream annotation.
enum class NpeOp : std::uint8_t {
  Nop = 0,
  LayerBegin = 1,
  Ma = 2,      // compute slot only
  Load = 3,    // memory slot only
  MaLoad = 4,  // both slots the same cycle
};

// Fixed 16-byte instruction word.
// Compute slot: d0 = segment id, (d2:d1) = 32-bit issue ordinal inside the
// segment, tap = adder-tree tap depth.  LayerBegin: d0 = segment id,
// d1 = layer kind, d2 = issue count, tap = segment tap.
// Memory slot: ra = operand-collector ring slot, rb = int8 words fetched,
// maddr = byte offset into the parameter image.
struct NpeInstruction {
  std::uint8_t opcode = 0;
  std::uint8_t tap = 0;
  std::uint16_t d0 = 0, d1 = 0, d2 = 0;
  std::uint16_t ra = 0, rb = 0;
  std::uint32_t maddr = 0;
};
static_assert(sizeof(NpeInstruction) == 16, "instruction word must be 16B");

// One MAU-lane task inside an issue: products [prod_begin, prod_begin +
// prod_count) of output `out` of buffer `qlayer`; `finalize` marks the
// output's last chunk (SF applies bias/activation/rescale and writes).
struct NpeLane {
  std::int32_t qlayer = 0;
  std::int32_t out = 0;
  std::int32_t prod_begin = 0;
  std::int32_t prod_count = 0;
  bool finalize = true;
};

struct NpeIssue {
  std::int32_t segment = 0;
  std::uint8_t tap = 0;
  std::int32_t gate_round = -1;  // syndrome round this issue waits for
  std::vector<NpeLane> lanes;
};

// A segment is one queue of same-shape layer instances lowered together:
// each conv, the feature FC, all head hidden layers, all head output layers.
struct NpeSegment {
  QLayer::Kind kind = QLayer::Kind::Fc;
  std::vector<int> qlayers;  // global buffer ids written by this segment
  int tap = 0;
  std::int64_t issue_begin = 0;
  std::int64_t issue_count = 0;
};

struct NpeProgram {
  NpeConfig config;
  QuantizedNetwork qnet;  // parameter memory image
  std::vector<NpeSegment> segments;
  std::vector<NpeIssue> issues;             // compute semantics, issue order
  std::vector<NpeInstruction> stream;       // one record per cycle + markers
  std::vector<std::int32_t> gate_round;     // per record; -1 = ungated
  std::uint64_t cycle_count = 0;            // includes pipeline drain
};

// Global buffer ids: -1 = network input, then frontend layers in order,
// then per head (hidden, output).
int buffer_count(const NetworkSpec& spec);

// ---------------------------------------------------------------------------
// Compiler

// Lowers the quantized network onto the machine: each segment's outputs are
// packed c / 2^tap per issue with the smallest tap whose 2^tap * mau_width
// window covers one output's products, or split into full-depth chunks with
// SF accumulation when one output exceeds c * mau_width products; the first
// layer is lowered in syndrome-round-aligned blocks so window pipelining can
// start before the full input has arrived; operand loads are software-
// pipelined on the memory slot; hazards are resolved by NOP insertion.
// Throws when a layer's activations exceed the register file, the spec does
// not match the quantized network, or the config is invalid.
NpeProgram compile(const NetworkSpec& spec, const QuantizedNetwork& qnet,
                   const NpeConfig& config);

// Closed-form issue counts per segment (pure shape arithmetic, no lowering)
// and their total; compile() must produce exactly these many MA issues.
std::vector<std::int64_t> planned_issue_counts(const NetworkSpec& spec,
                                               const NpeConfig& config);
std::int64_t planned_issue_count(const NetworkSpec& spec,
                                 const NpeConfig& config);

// ---------------------------------------------------------------------------
// Simulator

struct NpeTraceEvent {
  std::uint64_t cycle = 0;
  char stage = '?';  // 'L' load, 'M' MA issue, 'W' SF write, 'X' marker
  std::int64_t record = -1;
  std::string event;
};

struct NpeRunResult {
  QLogits logits;
  std::uint64_t cycles = 0;
  double seconds = 0.0;
};

// Executes the stream cycle by cycle and evaluates the datapath; logits are
// bit-exact against forward_quantized by construction (same product multiset,
// same bias, same accumulator post-processing).  Verifies hazard-freedom of
// the static schedule (operand loads landed, RAW distances respected, no SF
// write-port collision) and throws std::runtime_error on any violation —
// that would be a compiler bug or a tampered program.
NpeRunResult simulate(const NpeProgram& program, const VecX<float>& input,
                      std::vector<NpeTraceEvent>* trace = nullptr);

// Sliding-window latency: syndrome round r becomes available at
// (r + 1) * sm_period_s; stream records gated on a round cannot start
// earlier.  Returns the time from the last round's arrival to the final
// write.  sm_period_s = 0 equals the full latency exactly; it never exceeds
// the full latency.  T must equal the program's round count.
double pipeline_latency_s(const NpeProgram& program, double sm_period_s,
                          int T);

// Renders trace events as CSV lines (cycle, stage, instruction index, event).
std::string trace_to_csv(const std::vector<NpeTraceEvent>& trace);

}  // namespace rscw
