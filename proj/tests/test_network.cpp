#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "rscw/network.hpp"
#include "rscw/rng.hpp"

using namespace rscw;

namespace {

double act_oracle(double x, const ActivationSpec& a) {
  if (x >= 0.0) return x;
  return a.kind == ActivationSpec::Kind::ReLU ? 0.0 : a.slope * x;
}

// Independent convolution: plain nested loops over output channel, output
// site, input channel and kernel offset, reading the flat channel-major
// layout directly and treating out-of-range taps as zero.
std::vector<double> conv_oracle(const Conv3dSpec& c,
                                const std::array<int, 4>& in_dims,
                                const MatX<double>& w, const VecX<double>& b,
                                const std::vector<double>& in) {
  const int kt = c.kernel[0], kh = c.kernel[1], kw = c.kernel[2];
  const int Td = in_dims[1], Hd = in_dims[2], Wd = in_dims[3];
  const int To = (Td + kt - 1) / kt, Ho = (Hd + kh - 1) / kh,
            Wo = (Wd + kw - 1) / kw;
  std::vector<double> out(static_cast<std::size_t>(c.out_ch) * To * Ho * Wo);
  for (int co = 0; co < c.out_ch; ++co)
    for (int ot = 0; ot < To; ++ot)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          double acc = b[co];
          for (int ci = 0; ci < c.in_ch; ++ci)
            for (int dt = 0; dt < kt; ++dt)
              for (int dh = 0; dh < kh; ++dh)
                for (int dw = 0; dw < kw; ++dw) {
                  const int t = ot * kt + dt, h = oh * kh + dh,
                            x = ow * kw + dw;
                  if (t >= Td || h >= Hd || x >= Wd) continue;
                  acc += w(co, ci * kt * kh * kw + (dt * kh + dh) * kw + dw) *
                         in[((static_cast<std::size_t>(ci) * Td + t) * Hd + h) *
                                Wd +
                            x];
                }
          out[((static_cast<std::size_t>(co) * To + ot) * Ho + oh) * Wo + ow] =
              acc;
        }
  return out;
}

std::vector<double> fc_oracle(const MatX<double>& w, const VecX<double>& b,
                              const std::vector<double>& in) {
  std::vector<double> out(w.rows());
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double acc = b[r];
    for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * in[c];
    out[r] = acc;
  }
  return out;
}

// Full-network oracle: returns every head's logits.
std::vector<std::vector<double>> forward_oracle(const NetworkSpec& spec,
                                                const Weights<double>& w,
                                                const VecX<double>& input) {
  std::vector<double> x(input.data(), input.data() + input.size());
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    auto pre = conv_oracle(spec.convs[l], spec.volume_before(l), w.convs[l].w,
                           w.convs[l].b, x);
    for (double& v : pre) v = act_oracle(v, spec.hidden_act);
    x = pre;
  }
  auto feat = fc_oracle(w.frontend.w, w.frontend.b, x);
  for (double& v : feat) v = act_oracle(v, spec.hidden_act);
  std::vector<std::vector<double>> heads;
  for (int h = 0; h < spec.n_heads(); ++h) {
    auto hid = fc_oracle(w.heads[h].l1.w, w.heads[h].l1.b, feat);
    for (double& v : hid) v = act_oracle(v, spec.hidden_act);
    heads.push_back(fc_oracle(w.heads[h].l2.w, w.heads[h].l2.b, hid));
  }
  return heads;
}

// Independent operation count: one multiplication per (output value, dense
// kernel tap) pair — padding zeros still cost a multiply, matching how the
// integer datapath issues work.
std::int64_t mult_oracle(const NetworkSpec& spec) {
  std::int64_t n = 0;
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    auto out = spec.volume_before(l + 1);
    const auto& c = spec.convs[l];
    n += static_cast<std::int64_t>(out[1]) * out[2] * out[3] * c.out_ch *
         c.in_ch * c.kernel[0] * c.kernel[1] * c.kernel[2];
  }
  n += static_cast<std::int64_t>(spec.frontend_fc_in()) * spec.feature_width;
  for (int h = 0; h < spec.n_heads(); ++h)
    n += static_cast<std::int64_t>(spec.feature_width) * spec.head_hidden +
         static_cast<std::int64_t>(spec.head_hidden) * spec.head_out(h);
  return n;
}

NetworkSpec tiny_fc_spec() {
  NetworkSpec spec;
  spec.type = StabType::X;
  spec.input = {1, 1, 2};
  spec.feature_width = 1;
  spec.head_hidden = 1;
  spec.piece_sizes = {1};
  spec.hidden_act = {ActivationSpec::Kind::ReLU, 0.0};
  return spec;
}

}  // namespace

TEST_CASE("pinned single-layer example: [[1,-1]] b=[1] on x=(2,3) gives 0") {
  auto spec = tiny_fc_spec();
  auto w = init_weights<double>(spec, 1);
  w.frontend.w << 1.0, -1.0;
  w.frontend.b << 1.0;
  VecX<double> x(2);
  x << 2.0, 3.0;
  Trace<double> tr;
  forward(spec, w, x, &tr);
  CHECK(tr.preacts[0][0] == doctest::Approx(0.0));
  CHECK(tr.acts[1][0] == doctest::Approx(0.0));
  // Negative pre-activation with ReLU clamps to zero.
  w.frontend.b << 0.5;
  forward(spec, w, x, &tr);
  CHECK(tr.preacts[0][0] == doctest::Approx(-0.5));
  CHECK(tr.acts[1][0] == doctest::Approx(0.0));
  // LeakyReLU keeps 1/8 of it.
  spec.hidden_act = {ActivationSpec::Kind::LeakyReLU, 0.125};
  forward(spec, w, x, &tr);
  CHECK(tr.acts[1][0] == doctest::Approx(-0.0625));
}

TEST_CASE("forward matches the nested-loop oracle on conv stacks") {
  Rng rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    NetworkSpec spec;
    spec.type = StabType::Z;
    spec.input = {3 + static_cast<int>(rng.below(4)),
                  2 + static_cast<int>(rng.below(4)),
                  1 + static_cast<int>(rng.below(4))};
    int ch = 1;
    const int n_convs = 1 + static_cast<int>(rng.below(2));
    std::array<int, 3> dims = spec.input;
    for (int l = 0; l < n_convs; ++l) {
      Conv3dSpec c;
      c.in_ch = ch;
      c.out_ch = 2 + static_cast<int>(rng.below(3));
      for (int a = 0; a < 3; ++a)
        c.kernel[a] = std::min(1 + static_cast<int>(rng.below(3)), dims[a]);
      for (int a = 0; a < 3; ++a)
        dims[a] = (dims[a] + c.kernel[a] - 1) / c.kernel[a];
      ch = c.out_ch;
      spec.convs.push_back(c);
    }
    spec.feature_width = 5;
    spec.head_hidden = 3;
    spec.piece_sizes = {2, 1};
    auto w = init_weights<double>(spec, 1000 + trial);
    // Nonzero biases so the affine part is exercised everywhere.
    for (auto& c : w.convs) c.b.setRandom();
    w.frontend.b.setRandom();
    for (auto& h : w.heads) {
      h.l1.b.setRandom();
      h.l2.b.setRandom();
    }
    VecX<double> x(spec.input[0] * spec.input[1] * spec.input[2]);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] = 2.0 * rng.uniform() - 1.0;

    auto got = forward(spec, w, x);
    auto want = forward_oracle(spec, w, x);
    REQUIRE(want.size() == static_cast<std::size_t>(spec.n_heads()));
    for (int i = 0; i < 2; ++i)
      CHECK(got.class_logits[i] == doctest::Approx(want[0][i]).epsilon(1e-12));
    for (std::size_t j = 0; j < spec.piece_sizes.size(); ++j)
      for (int i = 0; i < spec.head_out(static_cast<int>(j) + 1); ++i)
        CHECK(got.s_logits[j][i] ==
              doctest::Approx(want[j + 1][i]).epsilon(1e-12));
  }
}

TEST_CASE("col2im is the exact adjoint of im2col") {
  // <im2col(x), p> == <x, col2im(p)> for random x, p: validates the backward
  // scatter used by training.
  Rng rng(5150);
  Conv3dSpec c;
  c.in_ch = 2;
  c.out_ch = 3;
  c.kernel = {2, 3, 2};
  std::array<int, 4> dims{2, 5, 4, 3};
  const int n = dims[0] * dims[1] * dims[2] * dims[3];
  VecX<double> x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = 2.0 * rng.uniform() - 1.0;
  MatX<double> p0 = im2col(c, dims, x);
  MatX<double> p(p0.rows(), p0.cols());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    p.data()[i] = 2.0 * rng.uniform() - 1.0;
  const double lhs = (p0.array() * p.array()).sum();
  const double rhs = x.dot(col2im(c, dims, p));
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("multiplication and parameter counts match enumeration and pins") {
  // Pinned: a dense 10->5 affine map costs 50 multiplications.
  {
    auto spec = tiny_fc_spec();
    spec.input = {1, 1, 10};
    spec.feature_width = 5;
    const std::int64_t frontend_part =
        static_cast<std::int64_t>(spec.frontend_fc_in()) * spec.feature_width;
    CHECK(frontend_part == 50);
    CHECK(count_multiplications(spec) == mult_oracle(spec));
  }
  // Pinned: kernel-2 stepper conv, 1 -> 4 channels on a 4x4x4 volume: 8
  // output sites x 4 channels x 8 taps = 256 multiplications.
  {
    NetworkSpec spec;
    spec.input = {4, 4, 4};
    spec.convs = {Conv3dSpec{1, 4, {2, 2, 2}}};
    spec.feature_width = 1;
    spec.head_hidden = 1;
    spec.piece_sizes = {1};
    auto out = spec.volume_before(1);
    const std::int64_t conv_part = static_cast<std::int64_t>(out[1]) * out[2] *
                                   out[3] * 4 * (1 * 8);
    CHECK(conv_part == 256);
    CHECK(count_multiplications(spec) == mult_oracle(spec));
  }
  // Family members agree with enumeration, and parameters count every weight
  // and bias exactly (cross-checked by summing matrix sizes of real weights).
  for (int L : {3, 5, 7, 9, 11}) {
    auto code = RscCode::build(L);
    for (auto type : {StabType::X, StabType::Z}) {
      auto spec = default_spec(code, default_rounds(L), type);
      CHECK(count_multiplications(spec) == mult_oracle(spec));
      auto w = init_weights<float>(spec, 9);
      std::int64_t params = 0;
      for (const auto& c : w.convs) params += c.w.size() + c.b.size();
      params += w.frontend.w.size() + w.frontend.b.size();
      for (const auto& h : w.heads)
        params += h.l1.w.size() + h.l1.b.size() + h.l2.w.size() +
                  h.l2.b.size();
      CHECK(count_parameters(spec) == params);
    }
  }
}

TEST_CASE("default family shape: conv depth, input bits, piece structure") {
  // Conv depth grows with distance until the volume is exhausted.
  const std::vector<std::pair<int, int>> expected_convs = {
      {3, 0}, {5, 1}, {7, 3}, {9, 4}, {11, 4}};
  for (auto [L, n] : expected_convs) {
    auto code = RscCode::build(L);
    auto spec = default_spec(code, default_rounds(L), StabType::X);
    CHECK(static_cast<int>(spec.convs.size()) == n);
    // Depth is only ever cut short because the volume hit a single site.
    if (n < std::max(0, L - 4)) {
      auto v = spec.volume_before(spec.convs.size());
      CHECK(v[1] * v[2] * v[3] == 1);
    }
    // Stepper property: every layer shrinks each axis by exactly its kernel
    // (ceil), and kernels never exceed the incoming dims.
    for (std::size_t l = 0; l < spec.convs.size(); ++l) {
      auto in = spec.volume_before(l), out = spec.volume_before(l + 1);
      for (int a = 0; a < 3; ++a) {
        CHECK(spec.convs[l].kernel[a] <= in[a + 1]);
        CHECK(out[a + 1] == (in[a + 1] + spec.convs[l].kernel[a] - 1) /
                                spec.convs[l].kernel[a]);
      }
    }
    // Syndrome pieces cover (L^2-1)/2 bits, four per head.
    CHECK(spec.syndrome_bits() == (L * L - 1) / 2);
    for (int p : spec.piece_sizes) CHECK(p == 4);
  }
  // The published working point: distance 5, ten rounds, 120 input bits.
  auto code5 = RscCode::build(5);
  auto spec5 = default_spec(code5, 10, StabType::X);
  CHECK(spec5.input[0] * spec5.input[1] * spec5.input[2] == 120);
  // The large preset lands at the published order of magnitude.
  auto big = wide_spec(code5, 10, StabType::Z);
  CHECK(count_parameters(big) > 100000);
  CHECK(count_parameters(big) < 1000000);
  CHECK(count_multiplications(big) > 100000);
  CHECK(count_multiplications(big) < 1600000);
}

TEST_CASE("family scaling: parameters O(L^2), multiplications O(L^3)") {
  for (int L : {3, 5, 7, 9, 11}) {
    auto code = RscCode::build(L);
    for (auto type : {StabType::X, StabType::Z}) {
      auto spec = default_spec(code, default_rounds(L), type);
      const double p_ratio =
          static_cast<double>(count_parameters(spec)) / (L * L);
      const double m_ratio =
          static_cast<double>(count_multiplications(spec)) /
          (static_cast<double>(L) * L * L);
      CHECK(p_ratio < 6000.0);
      CHECK(m_ratio < 2500.0);
    }
  }
}

TEST_CASE("seeded initialization is deterministic, bounded, zero-bias") {
  auto code = RscCode::build(5);
  auto spec = default_spec(code, 10, StabType::X);
  auto a = init_weights<float>(spec, 42);
  auto b = init_weights<float>(spec, 42);
  auto c = init_weights<float>(spec, 43);
  CHECK(a.frontend.w == b.frontend.w);
  CHECK(a.heads[1].l1.w == b.heads[1].l1.w);
  CHECK(a.frontend.w != c.frontend.w);
  CHECK(a.frontend.b.isZero());
  const double lim = std::sqrt(
      6.0 / (spec.feature_width + spec.frontend_fc_in()));
  CHECK(a.frontend.w.cwiseAbs().maxCoeff() <= lim);
  CHECK(a.frontend.w.cwiseAbs().maxCoeff() > 0.5 * lim);  // actually spread
}

TEST_CASE("syndrome bits land on their grid cell, round-major") {
  auto code = RscCode::build(5);
  for (auto type : {StabType::X, StabType::Z}) {
    auto [H, W] = code.grid_shape(type);
    SyndromeArray syn(4, code.n_stabilizers(type));
    syn.set(2, 5, 1);
    syn.set(0, 0, 1);
    auto x = syndrome_to_input<float>(code, syn, type);
    REQUIRE(x.size() == 4 * H * W);
    int ones = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) ones += x[i] == 1.0f;
    CHECK(ones == 2);
    auto [r5, c5] = code.grid_pos(type, 5);
    CHECK(x[(2 * H + r5) * W + c5] == 1.0f);
    auto [r0, c0] = code.grid_pos(type, 0);
    CHECK(x[(0 * H + r0) * W + c0] == 1.0f);
  }
}

TEST_CASE("logit argmax assembles class bit and syndrome pieces") {
  NetworkSpec spec;
  spec.input = {1, 1, 4};
  spec.feature_width = 4;
  spec.head_hidden = 2;
  spec.piece_sizes = {3, 2};
  Logits<float> lg;
  lg.class_logits.resize(2);
  lg.class_logits << 0.1f, 0.7f;
  lg.s_logits.resize(2);
  lg.s_logits[0].resize(8);
  lg.s_logits[0] << 0, 0, 0, 0, 0, 3, 0, 0;  // index 5 = bits 101
  lg.s_logits[1].resize(4);
  lg.s_logits[1] << 0, 0, 2, 0;  // index 2 = bits 01
  auto [cls, s] = prediction_from_logits(spec, lg);
  CHECK(cls == 1);
  CHECK(s.size() == 5);
  CHECK(s.get(0) == 1);  // piece 0 bit 0
  CHECK(s.get(1) == 0);
  CHECK(s.get(2) == 1);
  CHECK(s.get(3) == 0);  // piece 1 bit 0
  CHECK(s.get(4) == 1);
  // Ties break to the lowest index.
  lg.class_logits << 0.5f, 0.5f;
  CHECK(prediction_from_logits(spec, lg).first == 0);
}

TEST_CASE("spec validation rejects malformed configurations") {
  auto code = RscCode::build(5);
  auto good = default_spec(code, 10, StabType::X);
  CHECK_NOTHROW(good.validate());
  auto bad = good;
  bad.piece_sizes.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = good;
  bad.piece_sizes[0] = 17;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = good;
  bad.convs[0].in_ch = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = good;
  bad.feature_width = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(default_spec(code, 0, StabType::X), std::invalid_argument);
}
