#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rscw/network.hpp"

namespace rscw {

// Nearest integer, halves away from zero: 0.5 -> 1, -0.5 -> -1.
std::int64_t round_half_away(double x);

// Arithmetic right shift by `shift` with round-half-away-from-zero
// (shift == 0 returns v unchanged).
std::int64_t shift_round_half_away(std::int64_t v, int shift);

// One integer layer, shared between the reference interpreter here and the
// cycle-accurate datapath model: int8 weights/activations, int32 bias at the
// accumulator scale, int64 accumulation, optional hidden activation
// (ReLU or the exact shift-by-3 leaky variant) applied to the accumulator,
// then a multiplier/shift rescale to the next int8 scale and a clamp.
struct QLayer {
  enum class Kind : std::uint8_t { Conv = 0, Fc = 1 };
  Kind kind = Kind::Fc;
  Conv3dSpec conv;               // geometry when kind == Conv
  std::array<int, 4> in_dims{};  // conv input volume (C, T, H, W)
  int in_size = 0;               // flat input length
  int out_size = 0;              // flat output length
  std::vector<std::int8_t> w;    // row-major: out x taps
  std::vector<std::int32_t> bias;
  float weight_scale = 0.0f;     // 127 / max|w_float|
  float in_scale = 0.0f;         // scale of incoming int8 activations
  float out_scale = 0.0f;        // scale of outgoing int8 activations
  std::int32_t mult = 0;         // rescale multiplier, in [2^14, 2^15)
  int shift = 0;                 // rescale right shift
  bool activate = true;          // false on head outputs (logits)
};

struct QuantizedNetwork {
  NetworkSpec spec;
  std::vector<QLayer> frontend;  // convs in order, then the feature FC
  struct QHead {
    QLayer l1, l2;
  };
  std::vector<QHead> heads;  // heads[0] = class head
};

// Accumulator post-processing shared by every integer execution path:
// optional activation on the raw accumulator, rescale, clamp to int8.
std::int8_t sf_postprocess(std::int64_t acc, std::int32_t mult, int shift,
                           ActivationSpec::Kind act_kind, bool activate);

// Largest |value| seen at the network input and at every unit output
// (post-activation; raw logits for head output layers) over a batch.
struct CalibrationStats {
  float in_max = 0.0f;
  std::vector<float> frontend_max;                // per frontend unit
  std::vector<std::array<float, 2>> head_max;     // per head: hidden, logits
};

CalibrationStats calibrate(const NetworkSpec& spec, const Weights<float>& w,
                           const std::vector<VecX<float>>& inputs);

// Scale selection and integer conversion.  Throws std::runtime_error when a
// scale would be non-finite (all-zero weights, dead activations) or a
// rescale ratio cannot be represented by a [2^14, 2^15) multiplier.
QuantizedNetwork quantize(const NetworkSpec& spec, const Weights<float>& w,
                          const CalibrationStats& stats);
QuantizedNetwork quantize(const NetworkSpec& spec, const Weights<float>& w,
                          const std::vector<VecX<float>>& calibration_inputs);

struct QLogits {
  std::vector<std::vector<std::int8_t>> heads;  // heads[0] = class logits
};

// Reference integer interpreter.  Input is quantized with the first layer's
// in_scale (syndrome bits land exactly on {0, 127}).
QLogits forward_quantized(const QuantizedNetwork& qn, const VecX<float>& input);

// Head argmaxes (ties to the lowest index) assembled into (class, syndrome).
std::pair<int, BitVec> prediction_from_qlogits(const NetworkSpec& spec,
                                               const QLogits& lg);

// Logits mapped back to real units (value / out_scale) for drift checks.
std::vector<std::vector<float>> dequantize_logits(const QuantizedNetwork& qn,
                                                  const QLogits& lg);

}  // namespace rscw
