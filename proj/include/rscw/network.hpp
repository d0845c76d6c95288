#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rscw/code.hpp"
#include "rscw/noise.hpp"

namespace rscw {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct ActivationSpec {
  enum class Kind : std::uint8_t { ReLU = 0, LeakyReLU = 1 };
  Kind kind = Kind::LeakyReLU;
  double slope = 0.125;  // 1/8: exact arithmetic shift in the integer path
};

// 3-D convolution with stride equal to the kernel on every axis (stepper):
// input patches tile the zero-padded volume without overlap, so each layer
// shrinks the activation volume by the kernel factor.
struct Conv3dSpec {
  int in_ch = 1;
  int out_ch = 1;
  std::array<int, 3> kernel{1, 1, 1};  // (kt, kh, kw)
};

// One decoder network: it consumes the raw T x H x W syndrome array of one
// stabilizer type and infers the opposite-type error component as
// (homology class, residual syndrome) — a class head plus one head per
// syndrome piece.  Frontend: stepper Conv3D layers then one FC; backend:
// two-layer FC heads sharing the frontend features.
struct NetworkSpec {
  StabType type = StabType::X;  // syndrome type consumed
  std::array<int, 3> input{1, 1, 1};  // (T, H, W), single input channel
  std::vector<Conv3dSpec> convs;
  int feature_width = 128;  // frontend FC output
  int head_hidden = 64;
  std::vector<int> piece_sizes;  // bits per s-head, summing to (L^2-1)/2
  ActivationSpec hidden_act{};

  int n_heads() const { return 1 + static_cast<int>(piece_sizes.size()); }
  // Head 0 is the class head (2 outputs); head j>0 enumerates its piece.
  int head_out(int h) const {
    return h == 0 ? 2 : 1 << piece_sizes[h - 1];
  }
  int syndrome_bits() const {
    int s = 0;
    for (int p : piece_sizes) s += p;
    return s;
  }

  // Volume (C, T, H, W) entering conv layer i (i = convs.size() gives the
  // volume entering the frontend FC).
  std::array<int, 4> volume_before(std::size_t i) const {
    std::array<int, 4> v{1, input[0], input[1], input[2]};
    for (std::size_t l = 0; l < i; ++l) {
      v[0] = convs[l].out_ch;
      for (int a = 0; a < 3; ++a)
        v[a + 1] = (v[a + 1] + convs[l].kernel[a] - 1) / convs[l].kernel[a];
    }
    return v;
  }
  int frontend_fc_in() const {
    auto v = volume_before(convs.size());
    return v[0] * v[1] * v[2] * v[3];
  }

  void validate() const;
};

// Default syndrome-window length per code distance.
int default_rounds(int distance);

// Default spec family: constant channel width and head shape across L, conv
// depth set by how far stepper halving can shrink the volume, so parameters
// scale as O(L^2) (heads dominate) and multiplications as O(L^3).
NetworkSpec default_spec(const RscCode& code, int T, StabType type);
// The wider configuration (double conv channels, quadruple feature
// width; ~0.3M parameters at L=5).
NetworkSpec wide_spec(const RscCode& code, int T, StabType type);

std::int64_t count_multiplications(const NetworkSpec& spec);
std::int64_t count_parameters(const NetworkSpec& spec);

template <typename S>
struct LayerW {
  MatX<S> w;  // FC: out x in.  Conv: out_ch x (in_ch * kt * kh * kw).
  VecX<S> b;
};

template <typename S>
struct Weights {
  std::vector<LayerW<S>> convs;
  LayerW<S> frontend;
  struct Head {
    LayerW<S> l1, l2;
  };
  std::vector<Head> heads;  // heads[0] = class head
};

template <typename S>
struct Logits {
  VecX<S> class_logits;           // 2
  std::vector<VecX<S>> s_logits;  // 2^{piece} each
};

// Post-activation values of every unit, in execution order:
// acts[0] = input, acts[1..] = each frontend unit's output; per head the
// hidden activation and the logits (logits carry no activation).
template <typename S>
struct Trace {
  std::vector<VecX<S>> acts;
  std::vector<VecX<S>> preacts;  // parallel to acts[1..] (frontend units)
  std::vector<VecX<S>> head_pre1, head_act1;
};

template <typename S>
S activate_scalar(S x, const ActivationSpec& a) {
  if (x >= S(0)) return x;
  return a.kind == ActivationSpec::Kind::ReLU ? S(0)
                                              : static_cast<S>(a.slope) * x;
}

// Gathers zero-padded non-overlapping patches: row ci*kvol + offset within
// kernel, one column per output site (t-major, then h, then w).
template <typename S>
MatX<S> im2col(const Conv3dSpec& c, const std::array<int, 4>& in_dims,
               const VecX<S>& x) {
  const auto [kt, kh, kw] = c.kernel;
  const int Td = in_dims[1], Hd = in_dims[2], Wd = in_dims[3];
  const int To = (Td + kt - 1) / kt, Ho = (Hd + kh - 1) / kh,
            Wo = (Wd + kw - 1) / kw;
  const int kvol = kt * kh * kw;
  MatX<S> p = MatX<S>::Zero(c.in_ch * kvol, To * Ho * Wo);
  for (int ot = 0; ot < To; ++ot)
    for (int oh = 0; oh < Ho; ++oh)
      for (int ow = 0; ow < Wo; ++ow) {
        const int col = (ot * Ho + oh) * Wo + ow;
        for (int ci = 0; ci < c.in_ch; ++ci)
          for (int dt = 0; dt < kt; ++dt)
            for (int dh = 0; dh < kh; ++dh)
              for (int dw = 0; dw < kw; ++dw) {
                const int t = ot * kt + dt, h = oh * kh + dh, w = ow * kw + dw;
                if (t >= Td || h >= Hd || w >= Wd) continue;
                p(ci * kvol + (dt * kh + dh) * kw + dw, col) =
                    x[((ci * Td + t) * Hd + h) * Wd + w];
              }
      }
  return p;
}

// Scatters patch-space values back onto the (unpadded) input volume; exact
// adjoint of im2col because stepper patches never overlap.
template <typename S>
VecX<S> col2im(const Conv3dSpec& c, const std::array<int, 4>& in_dims,
               const MatX<S>& p) {
  const auto [kt, kh, kw] = c.kernel;
  const int Td = in_dims[1], Hd = in_dims[2], Wd = in_dims[3];
  const int To = (Td + kt - 1) / kt, Ho = (Hd + kh - 1) / kh,
            Wo = (Wd + kw - 1) / kw;
  const int kvol = kt * kh * kw;
  VecX<S> x = VecX<S>::Zero(c.in_ch * Td * Hd * Wd);
  for (int ot = 0; ot < To; ++ot)
    for (int oh = 0; oh < Ho; ++oh)
      for (int ow = 0; ow < Wo; ++ow) {
        const int col = (ot * Ho + oh) * Wo + ow;
        for (int ci = 0; ci < c.in_ch; ++ci)
          for (int dt = 0; dt < kt; ++dt)
            for (int dh = 0; dh < kh; ++dh)
              for (int dw = 0; dw < kw; ++dw) {
                const int t = ot * kt + dt, h = oh * kh + dh, w = ow * kw + dw;
                if (t >= Td || h >= Hd || w >= Wd) continue;
                x[((ci * Td + t) * Hd + h) * Wd + w] +=
                    p(ci * kvol + (dt * kh + dh) * kw + dw, col);
              }
      }
  return x;
}

// Flattens a conv output (out_ch x sites) into channel-major vector form.
template <typename S>
VecX<S> flatten_channels(const MatX<S>& out) {
  VecX<S> v(out.rows() * out.cols());
  for (Eigen::Index co = 0; co < out.rows(); ++co)
    for (Eigen::Index s = 0; s < out.cols(); ++s)
      v[co * out.cols() + s] = out(co, s);
  return v;
}

template <typename S>
Logits<S> forward(const NetworkSpec& spec, const Weights<S>& w,
                  const VecX<S>& input, Trace<S>* trace = nullptr) {
  if (input.size() != spec.input[0] * spec.input[1] * spec.input[2])
    throw std::invalid_argument("input size mismatch");
  VecX<S> x = input;
  if (trace) {
    trace->acts.clear();
    trace->preacts.clear();
    trace->head_pre1.clear();
    trace->head_act1.clear();
    trace->acts.push_back(x);
  }
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    const auto in_dims = spec.volume_before(l);
    MatX<S> patches = im2col(spec.convs[l], in_dims, x);
    MatX<S> out = (w.convs[l].w * patches).colwise() + w.convs[l].b;
    VecX<S> pre = flatten_channels(out);
    x = pre.unaryExpr(
        [&](S v) { return activate_scalar<S>(v, spec.hidden_act); });
    if (trace) {
      trace->preacts.push_back(pre);
      trace->acts.push_back(x);
    }
  }
  {
    VecX<S> pre = w.frontend.w * x + w.frontend.b;
    x = pre.unaryExpr(
        [&](S v) { return activate_scalar<S>(v, spec.hidden_act); });
    if (trace) {
      trace->preacts.push_back(pre);
      trace->acts.push_back(x);
    }
  }
  Logits<S> out;
  for (int h = 0; h < spec.n_heads(); ++h) {
    const auto& head = w.heads[h];
    VecX<S> pre1 = head.l1.w * x + head.l1.b;
    VecX<S> act1 = pre1.unaryExpr(
        [&](S v) { return activate_scalar<S>(v, spec.hidden_act); });
    VecX<S> logits = head.l2.w * act1 + head.l2.b;
    if (trace) {
      trace->head_pre1.push_back(pre1);
      trace->head_act1.push_back(act1);
    }
    if (h == 0)
      out.class_logits = logits;
    else
      out.s_logits.push_back(logits);
  }
  return out;
}

// Glorot-uniform initialization: limit sqrt(6/(fan_in+fan_out)) per layer,
// biases zero, draw order fixed (row-major per matrix, units in execution
// order) so a seed pins every weight.
template <typename S>
Weights<S> init_weights(const NetworkSpec& spec, std::uint64_t seed);

// Exact value-preserving conversion between scalar types (float <-> double).
template <typename From, typename To>
Weights<To> cast_weights(const Weights<From>& w) {
  Weights<To> out;
  auto conv = [](const LayerW<From>& l) {
    return LayerW<To>{l.w.template cast<To>(), l.b.template cast<To>()};
  };
  for (const auto& c : w.convs) out.convs.push_back(conv(c));
  out.frontend = conv(w.frontend);
  for (const auto& h : w.heads)
    out.heads.push_back({conv(h.l1), conv(h.l2)});
  return out;
}

// Raw syndrome bits placed on the type's ancilla grid, flattened t-major.
template <typename S>
VecX<S> syndrome_to_input(const RscCode& code, const SyndromeArray& syn,
                          StabType type) {
  const auto [H, W] = code.grid_shape(type);
  VecX<S> x = VecX<S>::Zero(static_cast<Eigen::Index>(syn.rounds) * H * W);
  for (int t = 0; t < syn.rounds; ++t)
    for (int k = 0; k < syn.n_stab; ++k) {
      auto [r, c] = code.grid_pos(type, k);
      x[(t * H + r) * W + c] = static_cast<S>(syn.get(t, k));
    }
  return x;
}

// Argmax with ties broken toward the lowest index (shared convention with
// the integer pipeline).
template <typename S>
int argmax_index(const VecX<S>& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Head argmaxes assembled back into a (class bit, syndrome bits) prediction.
template <typename S>
std::pair<int, BitVec> prediction_from_logits(const NetworkSpec& spec,
                                              const Logits<S>& lg) {
  const int class_bit = argmax_index(lg.class_logits);
  BitVec s(spec.syndrome_bits());
  int base = 0;
  for (std::size_t j = 0; j < spec.piece_sizes.size(); ++j) {
    const int idx = argmax_index(lg.s_logits[j]);
    for (int b = 0; b < spec.piece_sizes[j]; ++b)
      if ((idx >> b) & 1) s.set(base + b);
    base += spec.piece_sizes[j];
  }
  return {class_bit, s};
}

}  // namespace rscw
