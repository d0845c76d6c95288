#include "rscw/npe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace rscw {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Smallest usable tree tap whose 2^tap * mau_width window covers one
// output's product count (branch for outputs that fit the core).  With more
// than one MAU the shallowest tap is level 1; a single-MAU core bypasses the
// tree at tap 0.
int tap_for_window(std::int64_t n_products, const NpeConfig& cfg) {
  int d = cfg.mau_count > 1 ? 1 : 0;
  while ((std::int64_t{1} << d) * cfg.mau_width < n_products) ++d;
  return d;
}

// Global buffer table: -1 = network input, 0..nf-1 = frontend outputs,
// nf + 2h = head h hidden, nf + 2h + 1 = head h logits.
struct BufferTable {
  std::vector<const QLayer*> layer;  // by buffer id
  std::vector<int> input;            // buffer id each layer reads (-1 = input)
  int nf = 0;                        // frontend layer count
};

BufferTable collect_buffers(const QuantizedNetwork& qnet) {
  BufferTable b;
  b.nf = static_cast<int>(qnet.frontend.size());
  const int n = b.nf + 2 * static_cast<int>(qnet.heads.size());
  b.layer.resize(n);
  b.input.resize(n);
  for (int i = 0; i < b.nf; ++i) {
    b.layer[i] = &qnet.frontend[i];
    b.input[i] = i - 1;
  }
  for (std::size_t h = 0; h < qnet.heads.size(); ++h) {
    const int l1 = b.nf + 2 * static_cast<int>(h);
    b.layer[l1] = &qnet.heads[h].l1;
    b.input[l1] = b.nf - 1;
    b.layer[l1 + 1] = &qnet.heads[h].l2;
    b.input[l1 + 1] = l1;
  }
  return b;
}

// Products per output: an FC row spans the whole input, a conv output taps
// one kernel patch across input channels.
std::int64_t products_per_output(const QLayer& q) {
  if (q.kind == QLayer::Kind::Fc) return q.in_size;
  const auto& c = q.conv;
  return static_cast<std::int64_t>(c.in_ch) * c.kernel[0] * c.kernel[1] *
         c.kernel[2];
}

// Byte offset of one output's weight row inside its layer's parameter block.
// Conv outputs of one channel share a row.
std::int64_t weight_row_offset(const QLayer& q, int out) {
  const std::int64_t row = products_per_output(q);
  if (q.kind == QLayer::Kind::Fc) return static_cast<std::int64_t>(out) * row;
  const auto& c = q.conv;
  const int to = (q.in_dims[1] + c.kernel[0] - 1) / c.kernel[0];
  const int ho = (q.in_dims[2] + c.kernel[1] - 1) / c.kernel[1];
  const int wo = (q.in_dims[3] + c.kernel[2] - 1) / c.kernel[2];
  const int co = out / (to * ho * wo);
  return static_cast<std::int64_t>(co) * row;
}

// Per-buffer byte offsets of the parameter image (weights then bias words,
// buffers in order).
std::vector<std::int64_t> parameter_bases(const BufferTable& b) {
  std::vector<std::int64_t> base(b.layer.size(), 0);
  std::int64_t off = 0;
  for (std::size_t i = 0; i < b.layer.size(); ++i) {
    base[i] = off;
    off += static_cast<std::int64_t>(b.layer[i]->w.size()) +
           4 * static_cast<std::int64_t>(b.layer[i]->bias.size());
  }
  if (off > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("parameter image exceeds 32-bit addressing");
  return base;
}

void check_spec_matches_qnet(const NetworkSpec& spec,
                             const QuantizedNetwork& qnet) {
  const NetworkSpec& qs = qnet.spec;
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("spec does not match quantized network: " +
                                what);
  };
  if (qs.type != spec.type) fail("stabilizer type");
  if (qs.input != spec.input) fail("input volume");
  if (qs.convs.size() != spec.convs.size()) fail("conv depth");
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    if (qs.convs[l].in_ch != spec.convs[l].in_ch ||
        qs.convs[l].out_ch != spec.convs[l].out_ch ||
        qs.convs[l].kernel != spec.convs[l].kernel)
      fail("conv " + std::to_string(l) + " shape");
  }
  if (qs.feature_width != spec.feature_width) fail("feature width");
  if (qs.head_hidden != spec.head_hidden) fail("head hidden width");
  if (qs.piece_sizes != spec.piece_sizes) fail("piece split");
  if (qs.hidden_act.kind != spec.hidden_act.kind) fail("activation");
  if (static_cast<int>(qnet.frontend.size()) !=
      static_cast<int>(spec.convs.size()) + 1)
    fail("frontend layer count");
  if (static_cast<int>(qnet.heads.size()) != spec.n_heads())
    fail("head count");
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    const QLayer& q = qnet.frontend[l];
    const auto in = spec.volume_before(l);
    const auto out = spec.volume_before(l + 1);
    if (q.kind != QLayer::Kind::Conv || q.in_dims != in)
      fail("conv " + std::to_string(l) + " input volume");
    if (q.in_size != in[0] * in[1] * in[2] * in[3] ||
        q.out_size != out[0] * out[1] * out[2] * out[3])
      fail("conv " + std::to_string(l) + " flat sizes");
    const int kvol =
        q.conv.kernel[0] * q.conv.kernel[1] * q.conv.kernel[2];
    if (static_cast<std::int64_t>(q.w.size()) !=
            static_cast<std::int64_t>(q.conv.out_ch) * q.conv.in_ch * kvol ||
        static_cast<int>(q.bias.size()) != q.conv.out_ch)
      fail("conv " + std::to_string(l) + " parameter sizes");
  }
  const QLayer& fc = qnet.frontend.back();
  if (fc.kind != QLayer::Kind::Fc || fc.in_size != spec.frontend_fc_in() ||
      fc.out_size != spec.feature_width)
    fail("feature FC shape");
  for (int h = 0; h < spec.n_heads(); ++h) {
    const QLayer& l1 = qnet.heads[h].l1;
    const QLayer& l2 = qnet.heads[h].l2;
    if (l1.kind != QLayer::Kind::Fc || l1.in_size != spec.feature_width ||
        l1.out_size != spec.head_hidden)
      fail("head " + std::to_string(h) + " hidden shape");
    if (l2.kind != QLayer::Kind::Fc || l2.in_size != spec.head_hidden ||
        l2.out_size != spec.head_out(h))
      fail("head " + std::to_string(h) + " logits shape");
  }
  for (std::size_t i = 0; i < qnet.frontend.size(); ++i) {
    const QLayer& q = qnet.frontend[i];
    if (q.kind == QLayer::Kind::Fc &&
        (static_cast<std::int64_t>(q.w.size()) !=
             static_cast<std::int64_t>(q.out_size) * q.in_size ||
         static_cast<int>(q.bias.size()) != q.out_size))
      fail("frontend FC parameter sizes");
  }
  for (const auto& head : qnet.heads)
    for (const QLayer* q : {&head.l1, &head.l2})
      if (static_cast<std::int64_t>(q->w.size()) !=
              static_cast<std::int64_t>(q->out_size) * q->in_size ||
          static_cast<int>(q->bias.size()) != q->out_size)
        fail("head parameter sizes");
}

// One round-aligned block of a segment's work: outputs to produce, the
// product slice feeding each of them, and the syndrome round the slice needs.
struct IssueGroup {
  int gate = -1;
  std::int64_t prod_begin = 0;
  std::int64_t prod_count = 0;
  std::vector<std::pair<int, int>> outs;  // (buffer id, output index)
};

// Lowers one segment (a queue of same-shape layers) into groups.  The layer
// reading the network input is split into round-aligned groups so execution
// can start before the full window has arrived: a stepper conv by output
// round block (the patch of output step ot ends at input round
// (ot+1)*kt - 1), an FC by input round (the input flattens round-major, so
// round r owns columns [r*HW, (r+1)*HW)).
std::vector<IssueGroup> segment_groups(const BufferTable& b,
                                       const std::vector<int>& qids,
                                       const NetworkSpec& spec) {
  const QLayer& q0 = *b.layer[qids[0]];
  const bool reads_input = b.input[qids[0]] < 0;
  std::vector<IssueGroup> groups;
  if (reads_input && q0.kind == QLayer::Kind::Conv) {
    const auto& c = q0.conv;
    const int td = q0.in_dims[1];
    const int to = (td + c.kernel[0] - 1) / c.kernel[0];
    const int ho = (q0.in_dims[2] + c.kernel[1] - 1) / c.kernel[1];
    const int wo = (q0.in_dims[3] + c.kernel[2] - 1) / c.kernel[2];
    for (int ot = 0; ot < to; ++ot) {
      IssueGroup g;
      g.gate = std::min(td - 1, (ot + 1) * c.kernel[0] - 1);
      g.prod_begin = 0;
      g.prod_count = products_per_output(q0);
      for (int co = 0; co < c.out_ch; ++co)
        for (int oh = 0; oh < ho; ++oh)
          for (int ow = 0; ow < wo; ++ow)
            g.outs.emplace_back(qids[0],
                                ((co * to + ot) * ho + oh) * wo + ow);
      groups.push_back(std::move(g));
    }
    return groups;
  }
  if (reads_input) {  // FC directly on the syndrome window
    const int t = spec.input[0];
    const int hw = spec.input[1] * spec.input[2];
    for (int r = 0; r < t; ++r) {
      IssueGroup g;
      g.gate = r;
      g.prod_begin = static_cast<std::int64_t>(r) * hw;
      g.prod_count = hw;
      for (int out = 0; out < q0.out_size; ++out)
        g.outs.emplace_back(qids[0], out);
      groups.push_back(std::move(g));
    }
    return groups;
  }
  IssueGroup g;
  g.gate = -1;
  g.prod_begin = 0;
  g.prod_count = products_per_output(q0);
  for (int qid : qids) {
    const QLayer& q = *b.layer[qid];
    for (int out = 0; out < q.out_size; ++out) g.outs.emplace_back(qid, out);
  }
  groups.push_back(std::move(g));
  return groups;
}

// Emits the issue list of one segment.  Outputs whose product slice fits the
// core are packed c / 2^tap per issue at the shallowest covering tap; wider
// outputs are cut into full-core chunks finished by the SF accumulator.  A
// chunk that reaches the end of its output's row carries the finalize flag
// (bias + activation + rescale + write); earlier chunks only accumulate.
void lower_segment(const BufferTable& b, NpeSegment& seg,
                   const std::vector<IssueGroup>& groups,
                   const NpeConfig& cfg, std::vector<NpeIssue>& issues) {
  const std::int64_t cw =
      static_cast<std::int64_t>(cfg.mau_count) * cfg.mau_width;
  const std::int64_t ng = groups.front().prod_count;
  seg.issue_begin = static_cast<std::int64_t>(issues.size());
  if (ng > cw) {
    seg.tap = cfg.adder_tree_depth();
    for (const auto& g : groups) {
      for (const auto& [qid, out] : g.outs) {
        const std::int64_t row = products_per_output(*b.layer[qid]);
        for (std::int64_t cb = g.prod_begin; cb < g.prod_begin + g.prod_count;
             cb += cw) {
          NpeLane lane;
          lane.qlayer = qid;
          lane.out = out;
          lane.prod_begin = static_cast<std::int32_t>(cb);
          lane.prod_count = static_cast<std::int32_t>(
              std::min(cw, g.prod_begin + g.prod_count - cb));
          lane.finalize = (cb + lane.prod_count == row);
          NpeIssue is;
          is.segment = 0;  // fixed up by caller
          is.tap = static_cast<std::uint8_t>(seg.tap);
          is.gate_round = g.gate;
          is.lanes.push_back(lane);
          issues.push_back(std::move(is));
        }
      }
    }
  } else {
    seg.tap = tap_for_window(ng, cfg);
    const int per_issue = cfg.mau_count >> seg.tap;
    for (const auto& g : groups) {
      for (std::size_t i = 0; i < g.outs.size();
           i += static_cast<std::size_t>(per_issue)) {
        NpeIssue is;
        is.segment = 0;  // fixed up by caller
        is.tap = static_cast<std::uint8_t>(seg.tap);
        is.gate_round = g.gate;
        const std::size_t hi =
            std::min(g.outs.size(), i + static_cast<std::size_t>(per_issue));
        for (std::size_t k = i; k < hi; ++k) {
          const auto& [qid, out] = g.outs[k];
          NpeLane lane;
          lane.qlayer = qid;
          lane.out = out;
          lane.prod_begin = static_cast<std::int32_t>(g.prod_begin);
          lane.prod_count = static_cast<std::int32_t>(g.prod_count);
          lane.finalize =
              (g.prod_begin + g.prod_count == products_per_output(*b.layer[qid]));
          is.lanes.push_back(lane);
        }
        issues.push_back(std::move(is));
      }
    }
  }
  seg.issue_count = static_cast<std::int64_t>(issues.size()) - seg.issue_begin;
}

// Total weight bytes one issue's operand loads fetch.
std::int64_t issue_load_bytes(const NpeIssue& is) {
  std::int64_t n = 0;
  for (const auto& lane : is.lanes) n += lane.prod_count;
  return n;
}

std::int64_t expected_maddr(const BufferTable& b,
                            const std::vector<std::int64_t>& base,
                            const NpeIssue& is) {
  const NpeLane& lane = is.lanes.front();
  return base[lane.qlayer] +
         weight_row_offset(*b.layer[lane.qlayer], lane.out) + lane.prod_begin;
}

// Integer product sum of one lane's chunk, mirroring the reference integer
// interpreter's index arithmetic exactly (padded conv taps contribute zero
// and are skipped).
std::int64_t lane_products(const QLayer& q, const std::int8_t* src, int out,
                           std::int64_t pb, std::int64_t pn) {
  std::int64_t acc = 0;
  if (q.kind == QLayer::Kind::Fc) {
    const std::int8_t* row = q.w.data() + static_cast<std::size_t>(out) * q.in_size;
    for (std::int64_t k = pb; k < pb + pn; ++k)
      acc += static_cast<std::int64_t>(row[k]) * src[k];
    return acc;
  }
  const auto& c = q.conv;
  const int kt = c.kernel[0], kh = c.kernel[1], kw = c.kernel[2];
  const int kvol = kt * kh * kw;
  const int td = q.in_dims[1], hd = q.in_dims[2], wd = q.in_dims[3];
  const int to = (td + kt - 1) / kt;
  const int ho = (hd + kh - 1) / kh;
  const int wo = (wd + kw - 1) / kw;
  const int ow = out % wo;
  const int oh = (out / wo) % ho;
  const int ot = (out / (wo * ho)) % to;
  const int co = out / (wo * ho * to);
  const std::int8_t* row =
      q.w.data() + static_cast<std::size_t>(co) * c.in_ch * kvol;
  for (std::int64_t k = pb; k < pb + pn; ++k) {
    const int ci = static_cast<int>(k / kvol);
    const int r = static_cast<int>(k % kvol);
    const int dt = r / (kh * kw);
    const int dh = (r / kw) % kh;
    const int dw = r % kw;
    const int t0 = ot * kt + dt;
    const int h0 = oh * kh + dh;
    const int w0 = ow * kw + dw;
    if (t0 >= td || h0 >= hd || w0 >= wd) continue;
    acc += static_cast<std::int64_t>(row[k]) *
           src[(static_cast<std::size_t>(ci) * td + t0) * hd * wd +
               static_cast<std::size_t>(h0) * wd + w0];
  }
  return acc;
}

std::int64_t round_half_away_i64(double x) {
  return static_cast<std::int64_t>(x >= 0.0 ? std::floor(x + 0.5)
                                            : std::ceil(x - 0.5));
}

std::vector<std::int8_t> quantize_input(const QuantizedNetwork& qnet,
                                        const VecX<float>& input) {
  const auto& spec = qnet.spec;
  if (input.size() !=
      static_cast<Eigen::Index>(spec.input[0]) * spec.input[1] * spec.input[2])
    throw std::invalid_argument("input size mismatch");
  const float in_scale = qnet.frontend.front().in_scale;
  std::vector<std::int8_t> x(static_cast<std::size_t>(input.size()));
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    std::int64_t v =
        round_half_away_i64(static_cast<double>(input[i]) * in_scale);
    if (v > 127) v = 127;
    if (v < -128) v = -128;
    x[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(v);
  }
  return x;
}

void push_trace(std::vector<NpeTraceEvent>* trace, std::uint64_t cycle,
                char stage, std::int64_t record, std::string text) {
  if (!trace) return;
  trace->push_back(NpeTraceEvent{cycle, stage, record, std::move(text)});
}

}  // namespace

int NpeConfig::adder_tree_depth() const {
  int d = 0;
  while ((1 << (d + 1)) <= mau_count) ++d;
  return d;
}

void NpeConfig::validate() const {
  if (mau_count < 1 || mau_count > 4096 ||
      (mau_count & (mau_count - 1)) != 0)
    throw std::invalid_argument("mau_count must be a power of two in [1,4096]");
  if (mau_width < 1 || mau_width > 4096)
    throw std::invalid_argument("mau_width must be in [1,4096]");
  if (register_file_size < 1 || register_file_size > (1 << 24))
    throw std::invalid_argument("register_file_size must be in [1,2^24]");
  if (memory_read_latency_cycles < 0 || memory_read_latency_cycles > 1024)
    throw std::invalid_argument("memory_read_latency_cycles must be in [0,1024]");
  if (!(clock_frequency_hz > 0.0) || !std::isfinite(clock_frequency_hz))
    throw std::invalid_argument("clock_frequency_hz must be positive");
}

// ---------------------------------------------------------------------------
// Allocation

namespace {

void check_allocation_args(const std::vector<std::int64_t>& m,
                           const std::vector<int>& alpha, int c) {
  if (m.empty() || m.size() != alpha.size())
    throw std::invalid_argument("allocation needs matching non-empty M, alpha");
  for (std::int64_t v : m)
    if (v < 1) throw std::invalid_argument("multiply counts must be >= 1");
  for (int a : alpha)
    if (a < 1) throw std::invalid_argument("multiplicities must be >= 1");
  if (c < 1) throw std::invalid_argument("unit budget must be >= 1");
}

}  // namespace

std::vector<double> closed_form_allocation(const std::vector<std::int64_t>& M,
                                           const std::vector<int>& alpha,
                                           int C) {
  check_allocation_args(M, alpha, C);
  double s = 0.0;
  for (std::size_t j = 0; j < M.size(); ++j)
    s += alpha[j] * std::sqrt(static_cast<double>(M[j]));
  std::vector<double> out(M.size());
  for (std::size_t j = 0; j < M.size(); ++j)
    out[j] = C * std::sqrt(static_cast<double>(M[j])) / s;
  return out;
}

Allocation allocate(const std::vector<std::int64_t>& M,
                    const std::vector<int>& alpha, int C) {
  check_allocation_args(M, alpha, C);
  const std::size_t n = M.size();
  std::int64_t alpha_sum = 0;
  for (int a : alpha) alpha_sum += a;
  if (C < alpha_sum)
    throw std::invalid_argument(
        "infeasible unit budget: fewer units than layer instances");
  if (C > 8192)
    throw std::invalid_argument("unit budget too large for exact search");

  Allocation out;
  out.alpha = alpha;
  out.total = C;

  // Continuous optimum by monotone search on the constraint's multiplier:
  // the stationarity condition C_j(lambda) = sqrt(M_j / lambda) makes
  // g(lambda) = sum alpha_j C_j(lambda) strictly decreasing, so bisect
  // g(lambda) = C.
  auto g = [&](double lam) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      s += alpha[j] * std::sqrt(static_cast<double>(M[j]) / lam);
    return s;
  };
  double lo = 1.0, hi = 1.0;
  while (g(lo) <= C) lo /= 16.0;
  while (g(hi) > C) hi *= 16.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > C ? lo : hi) = mid;
  }
  const double lam = 0.5 * (lo + hi);
  out.continuous.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    out.continuous[j] = std::sqrt(static_cast<double>(M[j]) / lam);

  // Integer optimum by dynamic programming over exact budget consumption:
  // f[j][b] = least latency of layers j.. with exactly b units left.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> suffix(n + 1, 0);
  for (std::size_t j = n; j-- > 0;) suffix[j] = suffix[j + 1] + alpha[j];
  std::vector<std::vector<double>> f(n + 1,
                                     std::vector<double>(C + 1, inf));
  std::vector<std::vector<int>> pick(n, std::vector<int>(C + 1, 0));
  f[n][0] = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    for (int b = 0; b <= C; ++b) {
      const int cmax =
          static_cast<int>((b - suffix[j + 1]) / alpha[j]);
      for (int cj = 1; cj <= cmax; ++cj) {
        const int rem = b - alpha[j] * cj;
        const double rest = f[j + 1][rem];
        if (rest == inf) continue;
        const double v =
            static_cast<double>(alpha[j]) * static_cast<double>(M[j]) / cj +
            rest;
        if (v < f[j][b]) {
          f[j][b] = v;
          pick[j][b] = cj;
        }
      }
    }
  }
  if (f[0][C] == inf)
    throw std::invalid_argument(
        "infeasible unit budget: no exact integer partition");
  out.units.resize(n);
  int b = C;
  for (std::size_t j = 0; j < n; ++j) {
    out.units[j] = pick[j][b];
    b -= alpha[j] * out.units[j];
  }
  out.predicted_latency = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    out.predicted_latency += static_cast<double>(alpha[j]) *
                             static_cast<double>(M[j]) / out.units[j];
  return out;
}

AllocationProblem allocation_problem(const NetworkSpec& spec) {
  spec.validate();
  AllocationProblem p;
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    const auto& c = spec.convs[l];
    const auto out = spec.volume_before(l + 1);
    const std::int64_t sites =
        static_cast<std::int64_t>(out[1]) * out[2] * out[3];
    const int kvol = c.kernel[0] * c.kernel[1] * c.kernel[2];
    p.M.push_back(sites * c.out_ch *
                  (static_cast<std::int64_t>(c.in_ch) * kvol));
    p.alpha.push_back(1);
    p.names.push_back("conv" + std::to_string(l));
  }
  p.M.push_back(static_cast<std::int64_t>(spec.frontend_fc_in()) *
                spec.feature_width);
  p.alpha.push_back(1);
  p.names.push_back("feature_fc");
  p.M.push_back(static_cast<std::int64_t>(spec.feature_width) *
                spec.head_hidden);
  p.alpha.push_back(spec.n_heads());
  p.names.push_back("head_hidden");
  p.M.push_back(static_cast<std::int64_t>(spec.head_hidden) *
                spec.head_out(0));
  p.alpha.push_back(1);
  p.names.push_back("class_logits");
  // s-heads grouped by logits width (uniform pieces share one entry)
  std::vector<std::pair<int, int>> widths;  // (head_out, multiplicity)
  for (int h = 1; h < spec.n_heads(); ++h) {
    const int w = spec.head_out(h);
    auto it = std::find_if(widths.begin(), widths.end(),
                           [&](const auto& e) { return e.first == w; });
    if (it == widths.end())
      widths.emplace_back(w, 1);
    else
      ++it->second;
  }
  for (const auto& [w, mult] : widths) {
    p.M.push_back(static_cast<std::int64_t>(spec.head_hidden) * w);
    p.alpha.push_back(mult);
    p.names.push_back(widths.size() == 1
                          ? std::string("piece_logits")
                          : "piece_logits_" + std::to_string(w));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Compiler

int buffer_count(const NetworkSpec& spec) {
  return static_cast<int>(spec.convs.size()) + 1 + 2 * spec.n_heads();
}

std::vector<std::int64_t> planned_issue_counts(const NetworkSpec& spec,
                                               const NpeConfig& config) {
  config.validate();
  spec.validate();
  const std::int64_t cw =
      static_cast<std::int64_t>(config.mau_count) * config.mau_width;
  // Issues needed for `outs` outputs of `np` products each within one
  // round-aligned block: full-core chunking when one output exceeds the
  // core, else c / 2^tap outputs per issue.
  auto pack = [&](std::int64_t outs, std::int64_t np) {
    if (np > cw) return outs * ceil_div(np, cw);
    return ceil_div(outs, config.mau_count >> tap_for_window(np, config));
  };
  std::vector<std::int64_t> counts;
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    const auto& c = spec.convs[l];
    const auto in = spec.volume_before(l);
    const auto out = spec.volume_before(l + 1);
    const std::int64_t np = static_cast<std::int64_t>(in[0]) * c.kernel[0] *
                            c.kernel[1] * c.kernel[2];
    if (l == 0)
      counts.push_back(
          out[1] *
          pack(static_cast<std::int64_t>(c.out_ch) * out[2] * out[3], np));
    else
      counts.push_back(pack(
          static_cast<std::int64_t>(c.out_ch) * out[1] * out[2] * out[3], np));
  }
  if (spec.convs.empty())
    counts.push_back(
        spec.input[0] *
        pack(spec.feature_width,
             static_cast<std::int64_t>(spec.input[1]) * spec.input[2]));
  else
    counts.push_back(pack(spec.feature_width, spec.frontend_fc_in()));
  counts.push_back(
      pack(static_cast<std::int64_t>(spec.n_heads()) * spec.head_hidden,
           spec.feature_width));
  std::int64_t logit_outs = 0;
  for (int h = 0; h < spec.n_heads(); ++h) logit_outs += spec.head_out(h);
  counts.push_back(pack(logit_outs, spec.head_hidden));
  return counts;
}

std::int64_t planned_issue_count(const NetworkSpec& spec,
                                 const NpeConfig& config) {
  std::int64_t total = 0;
  for (std::int64_t c : planned_issue_counts(spec, config)) total += c;
  return total;
}

NpeProgram compile(const NetworkSpec& spec, const QuantizedNetwork& qnet,
                   const NpeConfig& config) {
  config.validate();
  spec.validate();
  check_spec_matches_qnet(spec, qnet);
  const BufferTable bt = collect_buffers(qnet);
  for (const QLayer* q : bt.layer)
    if (q->in_size + q->out_size > config.register_file_size)
      throw std::invalid_argument(
          "layer activations exceed the register file");
  if (static_cast<std::int64_t>(config.mau_count) * config.mau_width > 65535)
    throw std::invalid_argument("core wider than stream encoding supports");

  NpeProgram prog;
  prog.config = config;
  prog.qnet = qnet;

  // Segments: each conv alone, the feature FC, all head hidden layers as one
  // queue, all head logits layers as one queue.
  std::vector<std::vector<int>> seg_qids;
  for (int i = 0; i + 1 < bt.nf; ++i) seg_qids.push_back({i});
  seg_qids.push_back({bt.nf - 1});
  std::vector<int> l1s, l2s;
  for (std::size_t h = 0; h < qnet.heads.size(); ++h) {
    l1s.push_back(bt.nf + 2 * static_cast<int>(h));
    l2s.push_back(bt.nf + 2 * static_cast<int>(h) + 1);
  }
  seg_qids.push_back(l1s);
  seg_qids.push_back(l2s);

  prog.segments.resize(seg_qids.size());
  for (std::size_t s = 0; s < seg_qids.size(); ++s) {
    NpeSegment& seg = prog.segments[s];
    seg.qlayers = seg_qids[s];
    seg.kind = bt.layer[seg.qlayers[0]]->kind;
    const auto groups = segment_groups(bt, seg.qlayers, spec);
    const std::int64_t first = static_cast<std::int64_t>(prog.issues.size());
    lower_segment(bt, seg, groups, config, prog.issues);
    for (std::int64_t i = first;
         i < static_cast<std::int64_t>(prog.issues.size()); ++i)
      prog.issues[i].segment = static_cast<std::int32_t>(s);
    if (seg.issue_count > 65535)
      throw std::invalid_argument(
          "segment issue count exceeds stream encoding");
  }

  // Static schedule: operand loads run ahead on the memory slot (bounded by
  // the collector ring of memory_read_latency_cycles + 1 chunks), compute
  // issues retire in order once their operands landed, their producers'
  // outputs are written, and the SF slot at arrival is free.  Stalls become
  // NOPs; LayerBegin markers take no cycle.
  const std::vector<std::int64_t> bases = parameter_bases(bt);
  const std::int64_t n_issues = static_cast<std::int64_t>(prog.issues.size());
  const std::int64_t window = config.memory_read_latency_cycles + 1;
  std::vector<std::int64_t> load_cycle(n_issues, -1);
  std::vector<std::int64_t> written(bt.layer.size(), 0);
  std::vector<std::int64_t> need(bt.layer.size(), 0);
  std::vector<std::int64_t> last_write(bt.layer.size(), -1);
  for (std::size_t i = 0; i < bt.layer.size(); ++i)
    need[i] = bt.layer[i]->out_size;
  std::unordered_set<std::int64_t> sf_busy;
  std::int64_t t = 0, li = 0, mi = 0, max_done = 0;
  std::size_t next_seg = 0;
  auto ordinal = [&](std::int64_t i) {
    return i - prog.segments[prog.issues[i].segment].issue_begin;
  };
  while (mi < n_issues) {
    while (next_seg < prog.segments.size() &&
           mi == prog.segments[next_seg].issue_begin) {
      const NpeSegment& seg = prog.segments[next_seg];
      NpeInstruction ins;
      ins.opcode = static_cast<std::uint8_t>(NpeOp::LayerBegin);
      ins.tap = static_cast<std::uint8_t>(seg.tap);
      ins.d0 = static_cast<std::uint16_t>(next_seg);
      ins.d1 = static_cast<std::uint16_t>(seg.kind);
      ins.d2 = static_cast<std::uint16_t>(seg.issue_count);
      prog.stream.push_back(ins);
      prog.gate_round.push_back(-1);
      ++next_seg;
    }
    const NpeIssue& cand = prog.issues[mi];
    bool ma_ok = mi < li && t >= load_cycle[mi] + config.memory_read_latency_cycles &&
                 sf_busy.find(t + cand.tap + 1) == sf_busy.end();
    if (ma_ok)
      for (const auto& lane : cand.lanes) {
        const int src = bt.input[lane.qlayer];
        if (src >= 0 && (written[src] < need[src] || t <= last_write[src])) {
          ma_ok = false;
          break;
        }
      }
    const std::int64_t mi_next = mi + (ma_ok ? 1 : 0);
    const bool load_ok = li < n_issues && li - mi_next < window;
    NpeInstruction ins;
    if (ma_ok && load_ok)
      ins.opcode = static_cast<std::uint8_t>(NpeOp::MaLoad);
    else if (ma_ok)
      ins.opcode = static_cast<std::uint8_t>(NpeOp::Ma);
    else if (load_ok)
      ins.opcode = static_cast<std::uint8_t>(NpeOp::Load);
    else
      ins.opcode = static_cast<std::uint8_t>(NpeOp::Nop);
    if (ma_ok) {
      const std::int64_t ord = ordinal(mi);
      ins.tap = cand.tap;
      ins.d0 = static_cast<std::uint16_t>(cand.segment);
      ins.d1 = static_cast<std::uint16_t>(ord & 0xffff);
      ins.d2 = static_cast<std::uint16_t>((ord >> 16) & 0xffff);
    }
    if (load_ok) {
      ins.ra = static_cast<std::uint16_t>(li % window);
      ins.rb = static_cast<std::uint16_t>(issue_load_bytes(prog.issues[li]));
      ins.maddr = static_cast<std::uint32_t>(
          expected_maddr(bt, bases, prog.issues[li]));
      load_cycle[li] = t;
      ++li;
    }
    prog.stream.push_back(ins);
    prog.gate_round.push_back(ma_ok ? cand.gate_round : -1);
    if (ma_ok) {
      const std::int64_t done = t + cand.tap + 1;
      sf_busy.insert(done);
      max_done = std::max(max_done, done);
      for (const auto& lane : cand.lanes)
        if (lane.finalize) {
          ++written[lane.qlayer];
          last_write[lane.qlayer] =
              std::max(last_write[lane.qlayer], done);
        }
      ++mi;
    }
    ++t;
  }
  prog.cycle_count = static_cast<std::uint64_t>(max_done + 1);
  return prog;
}

// ---------------------------------------------------------------------------
// Simulator

NpeRunResult simulate(const NpeProgram& program, const VecX<float>& input,
                      std::vector<NpeTraceEvent>* trace) {
  const QuantizedNetwork& qnet = program.qnet;
  program.config.validate();
  if (program.gate_round.size() != program.stream.size())
    throw std::runtime_error("program gate table does not match stream");
  const BufferTable bt = collect_buffers(qnet);
  const std::vector<std::int64_t> bases = parameter_bases(bt);
  const std::vector<std::int8_t> xin = quantize_input(qnet, input);
  const auto act = qnet.spec.hidden_act.kind;
  const std::int64_t n_issues =
      static_cast<std::int64_t>(program.issues.size());
  const std::int64_t window = program.config.memory_read_latency_cycles + 1;

  std::vector<std::vector<std::int8_t>> vals(bt.layer.size());
  std::vector<std::vector<std::int64_t>> accs(bt.layer.size());
  std::vector<std::vector<std::uint8_t>> touched(bt.layer.size());
  std::vector<std::int64_t> written(bt.layer.size(), 0);
  std::vector<std::int64_t> last_write(bt.layer.size(), -1);
  for (std::size_t i = 0; i < bt.layer.size(); ++i) {
    vals[i].assign(static_cast<std::size_t>(bt.layer[i]->out_size), 0);
    accs[i].assign(static_cast<std::size_t>(bt.layer[i]->out_size), 0);
    touched[i].assign(static_cast<std::size_t>(bt.layer[i]->out_size), 0);
  }
  std::vector<std::int64_t> load_cycle(n_issues, -1);
  std::vector<std::uint8_t> sf_slot(
      static_cast<std::size_t>(program.cycle_count) + 2, 0);

  auto hazard = [&](std::int64_t record, std::uint64_t cycle,
                    const std::string& what) {
    push_trace(trace, cycle, 'X', record, "HAZARD " + what);
    throw std::runtime_error("hazard at stream record " +
                             std::to_string(record) + " cycle " +
                             std::to_string(cycle) + ": " + what);
  };

  std::int64_t t = 0, li = 0, mi = 0, max_done = 0;
  for (std::size_t rec = 0; rec < program.stream.size(); ++rec) {
    const NpeInstruction& ins = program.stream[rec];
    const auto op = static_cast<NpeOp>(ins.opcode);
    const std::int64_t irec = static_cast<std::int64_t>(rec);
    if (op == NpeOp::LayerBegin) {
      if (ins.d0 >= program.segments.size())
        hazard(irec, t, "marker names an unknown segment");
      if (trace) {
        std::ostringstream os;
        os << "segment " << ins.d0 << " begin ("
           << (static_cast<QLayer::Kind>(ins.d1) == QLayer::Kind::Conv
                   ? "conv"
                   : "fc")
           << " x" << ins.d2 << " issues; tap " << int(ins.tap) << ")";
        push_trace(trace, t, 'X', irec, os.str());
      }
      continue;
    }
    if (op != NpeOp::Nop && op != NpeOp::Ma && op != NpeOp::Load &&
        op != NpeOp::MaLoad)
      hazard(irec, t, "unknown opcode");
    const bool has_ma = op == NpeOp::Ma || op == NpeOp::MaLoad;
    const bool has_load = op == NpeOp::Load || op == NpeOp::MaLoad;
    if (has_ma) {
      if (mi >= n_issues) hazard(irec, t, "compute slot beyond issue list");
      const NpeIssue& is = program.issues[mi];
      const NpeSegment& seg = program.segments[is.segment];
      const std::int64_t ord = mi - seg.issue_begin;
      if (ins.d0 != is.segment || ins.tap != is.tap ||
          ins.d1 != (ord & 0xffff) || ins.d2 != ((ord >> 16) & 0xffff))
        hazard(irec, t, "compute slot does not match issue list");
      if (mi >= li || load_cycle[mi] < 0)
        hazard(irec, t, "operands were never loaded");
      if (t < load_cycle[mi] + program.config.memory_read_latency_cycles)
        hazard(irec, t, "operands still in flight");
      const std::int64_t done = t + is.tap + 1;
      if (done >= static_cast<std::int64_t>(sf_slot.size()))
        hazard(irec, t, "write lands beyond the declared cycle count");
      if (sf_slot[static_cast<std::size_t>(done)])
        hazard(irec, t, "SF stage collision");
      sf_slot[static_cast<std::size_t>(done)] = 1;
      for (const auto& lane : is.lanes) {
        const int src = bt.input[lane.qlayer];
        if (src >= 0) {
          if (written[src] < bt.layer[src]->out_size)
            hazard(irec, t, "reads a buffer not fully written");
          if (t <= last_write[src])
            hazard(irec, t, "reads a buffer written this very cycle or later");
        }
        const QLayer& q = *bt.layer[lane.qlayer];
        const std::int8_t* sp = src < 0 ? xin.data() : vals[src].data();
        auto& acc = accs[lane.qlayer][lane.out];
        if (!touched[lane.qlayer][lane.out]) {
          acc = q.kind == QLayer::Kind::Conv
                    ? q.bias[static_cast<std::size_t>(
                          weight_row_offset(q, lane.out) /
                          products_per_output(q))]
                    : q.bias[lane.out];
          touched[lane.qlayer][lane.out] = 1;
        }
        acc += lane_products(q, sp, lane.out, lane.prod_begin,
                             lane.prod_count);
        if (lane.finalize) {
          vals[lane.qlayer][lane.out] = sf_postprocess(
              acc, q.mult, q.shift, act, q.activate);
          ++written[lane.qlayer];
          last_write[lane.qlayer] = std::max(last_write[lane.qlayer], done);
          if (trace) {
            std::ostringstream os;
            os << "write buffer " << lane.qlayer << " out " << lane.out
               << " = " << int(vals[lane.qlayer][lane.out]);
            push_trace(trace, done, 'W', irec, os.str());
          }
        }
      }
      max_done = std::max(max_done, done);
      if (trace) {
        std::ostringstream os;
        os << "segment " << is.segment << " issue " << ord << " ("
           << is.lanes.size() << " lanes; tap " << int(is.tap) << ")";
        push_trace(trace, t, 'M', irec, os.str());
      }
      ++mi;
    }
    if (has_load) {
      if (li >= n_issues) hazard(irec, t, "memory slot beyond issue list");
      if (li - mi >= window) hazard(irec, t, "operand collector overflow");
      const NpeIssue& is = program.issues[li];
      if (ins.ra != li % window || ins.rb != issue_load_bytes(is) ||
          ins.maddr != static_cast<std::uint32_t>(
                           expected_maddr(bt, bases, is)))
        hazard(irec, t, "memory slot does not match issue list");
      load_cycle[li] = t;
      if (trace) {
        std::ostringstream os;
        os << "load issue " << li << ": " << ins.rb << " bytes @" << ins.maddr
           << " ring " << ins.ra;
        push_trace(trace, t, 'L', irec, os.str());
      }
      ++li;
    }
    ++t;
  }
  if (mi != n_issues || li != n_issues)
    throw std::runtime_error("stream ended before all issues executed");
  for (std::size_t i = 0; i < bt.layer.size(); ++i)
    if (written[i] != bt.layer[i]->out_size)
      throw std::runtime_error("stream left a buffer partially written");
  if (static_cast<std::uint64_t>(max_done + 1) != program.cycle_count)
    throw std::runtime_error("declared cycle count does not match execution");

  if (trace)
    std::stable_sort(trace->begin(), trace->end(),
                     [](const NpeTraceEvent& a, const NpeTraceEvent& b) {
                       return a.cycle < b.cycle;
                     });

  NpeRunResult out;
  out.cycles = program.cycle_count;
  out.seconds =
      static_cast<double>(out.cycles) / program.config.clock_frequency_hz;
  out.logits.heads.reserve(qnet.heads.size());
  for (std::size_t h = 0; h < qnet.heads.size(); ++h)
    out.logits.heads.push_back(vals[bt.nf + 2 * h + 1]);
  return out;
}

double pipeline_latency_s(const NpeProgram& program, double sm_period_s,
                          int T) {
  program.config.validate();
  if (!(sm_period_s >= 0.0) || !std::isfinite(sm_period_s))
    throw std::invalid_argument("measurement period must be finite and >= 0");
  if (T != program.qnet.spec.input[0])
    throw std::invalid_argument("round count does not match the program");
  if (program.gate_round.size() != program.stream.size())
    throw std::invalid_argument("program gate table does not match stream");
  const double clk = program.config.clock_frequency_hz;
  bool any_gate = false;
  for (std::int32_t g : program.gate_round) any_gate |= (g >= 0);
  if (!any_gate && sm_period_s > 0.0) {
    std::cerr << "[npe] warning: program has no round-aligned blocks; "
                 "falling back to full latency\n";
    return static_cast<double>(program.cycle_count) / clk;
  }
  // Walk the static stream in order at one record per cycle, holding each
  // record until its syndrome round has arrived (round r lands at
  // (r + 1) * sm_period_s).  Works in clock-cycle units so the ungated walk
  // reproduces the integer cycle count exactly.
  double pos = -1.0;
  double end = 0.0;
  for (std::size_t rec = 0; rec < program.stream.size(); ++rec) {
    const auto op = static_cast<NpeOp>(program.stream[rec].opcode);
    if (op == NpeOp::LayerBegin) continue;
    const std::int32_t gate = program.gate_round[rec];
    const double ready = gate >= 0 ? (gate + 1) * sm_period_s * clk : 0.0;
    pos = std::max(pos + 1.0, ready);
    if (op == NpeOp::Ma || op == NpeOp::MaLoad)
      end = std::max(end, pos + program.stream[rec].tap + 2.0);
  }
  const double last_arrival = T * sm_period_s * clk;
  return (end - last_arrival) / clk;
}

std::string trace_to_csv(const std::vector<NpeTraceEvent>& trace) {
  std::ostringstream os;
  os << "cycle,stage,instruction,event\n";
  for (const auto& ev : trace)
    os << ev.cycle << ',' << ev.stage << ',' << ev.record << ',' << ev.event
       << '\n';
  return os.str();
}

}  // namespace rscw
