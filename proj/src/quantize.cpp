#include "rscw/quantize.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rscw {

std::int64_t round_half_away(double x) {
  return static_cast<std::int64_t>(x >= 0.0 ? std::floor(x + 0.5)
                                            : std::ceil(x - 0.5));
}

std::int64_t shift_round_half_away(std::int64_t v, int shift) {
  if (shift <= 0) return v;
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (v >= 0) return (v + half) >> shift;
  return -((-v + half) >> shift);
}

std::int8_t sf_postprocess(std::int64_t acc, std::int32_t mult, int shift,
                           ActivationSpec::Kind act_kind, bool activate) {
  if (activate && acc < 0)
    acc = act_kind == ActivationSpec::Kind::ReLU ? 0 : (acc >> 3);
  std::int64_t v = shift_round_half_away(acc * mult, shift);
  if (v > 127) v = 127;
  if (v < -128) v = -128;
  return static_cast<std::int8_t>(v);
}

CalibrationStats calibrate(const NetworkSpec& spec, const Weights<float>& w,
                           const std::vector<VecX<float>>& inputs) {
  if (inputs.empty())
    throw std::invalid_argument("calibration set must be non-empty");
  CalibrationStats st;
  st.frontend_max.assign(spec.convs.size() + 1, 0.0f);
  st.head_max.assign(spec.n_heads(), {0.0f, 0.0f});
  Trace<float> tr;
  for (const auto& x : inputs) {
    Logits<float> lg = forward(spec, w, x, &tr);
    st.in_max = std::max(st.in_max, tr.acts[0].cwiseAbs().maxCoeff());
    for (std::size_t u = 0; u + 1 < tr.acts.size(); ++u)
      st.frontend_max[u] =
          std::max(st.frontend_max[u], tr.acts[u + 1].cwiseAbs().maxCoeff());
    for (int h = 0; h < spec.n_heads(); ++h) {
      st.head_max[h][0] =
          std::max(st.head_max[h][0], tr.head_act1[h].cwiseAbs().maxCoeff());
      const auto& logits = h == 0 ? lg.class_logits : lg.s_logits[h - 1];
      st.head_max[h][1] =
          std::max(st.head_max[h][1], logits.cwiseAbs().maxCoeff());
    }
  }
  return st;
}

namespace {

float checked_scale(float max_abs, const std::string& where) {
  if (!(max_abs > 0.0f) || !std::isfinite(max_abs))
    throw std::runtime_error("quantization: dead or non-finite value range (" +
                             where + ")");
  return 127.0f / max_abs;
}

QLayer make_qlayer(const MatX<float>& w, const VecX<float>& b, float in_scale,
                   float out_max, bool activate, const std::string& where) {
  QLayer q;
  q.in_size = static_cast<int>(w.cols());
  q.out_size = static_cast<int>(w.rows());
  q.in_scale = in_scale;
  q.weight_scale = checked_scale(w.cwiseAbs().maxCoeff(), where + " weights");
  q.w.resize(static_cast<std::size_t>(w.rows()) * w.cols());
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      std::int64_t v = round_half_away(static_cast<double>(w(r, c)) *
                                       q.weight_scale);
      if (v > 127) v = 127;
      if (v < -127) v = -127;
      q.w[static_cast<std::size_t>(r) * w.cols() + c] =
          static_cast<std::int8_t>(v);
    }
  const double bias_scale =
      static_cast<double>(q.weight_scale) * static_cast<double>(in_scale);
  q.bias.resize(b.size());
  for (Eigen::Index r = 0; r < b.size(); ++r) {
    const std::int64_t v = round_half_away(b[r] * bias_scale);
    if (v > INT32_MAX || v < INT32_MIN)
      throw std::runtime_error("quantization: bias overflows int32 (" + where +
                               ")");
    q.bias[r] = static_cast<std::int32_t>(v);
  }
  q.out_scale = checked_scale(out_max, where + " outputs");
  const double ratio = static_cast<double>(q.out_scale) / bias_scale;
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw std::runtime_error("quantization: non-finite rescale ratio (" +
                             where + ")");
  int shift = 0;
  while (std::round(ratio * std::ldexp(1.0, shift)) < 16384.0) {
    if (++shift > 62)
      throw std::runtime_error("quantization: rescale ratio too small (" +
                               where + ")");
  }
  const double m = std::round(ratio * std::ldexp(1.0, shift));
  if (m >= 32768.0)
    throw std::runtime_error("quantization: rescale ratio too large (" +
                             where + ")");
  q.mult = static_cast<std::int32_t>(m);
  q.shift = shift;
  q.activate = activate;
  return q;
}

std::vector<std::int8_t> apply_qlayer(const QLayer& q,
                                      ActivationSpec::Kind act,
                                      const std::vector<std::int8_t>& x) {
  std::vector<std::int8_t> out(q.out_size);
  if (q.kind == QLayer::Kind::Fc) {
    for (int r = 0; r < q.out_size; ++r) {
      std::int64_t acc = q.bias[r];
      const std::int8_t* row = q.w.data() + static_cast<std::size_t>(r) *
                                                q.in_size;
      for (int c = 0; c < q.in_size; ++c)
        acc += static_cast<std::int64_t>(row[c]) * x[c];
      out[r] = sf_postprocess(acc, q.mult, q.shift, act, q.activate);
    }
    return out;
  }
  const auto& c = q.conv;
  const int kt = c.kernel[0], kh = c.kernel[1], kw = c.kernel[2];
  const int Td = q.in_dims[1], Hd = q.in_dims[2], Wd = q.in_dims[3];
  const int To = (Td + kt - 1) / kt, Ho = (Hd + kh - 1) / kh,
            Wo = (Wd + kw - 1) / kw;
  const int kvol = kt * kh * kw;
  for (int co = 0; co < c.out_ch; ++co)
    for (int ot = 0; ot < To; ++ot)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          std::int64_t acc = q.bias[co];
          for (int ci = 0; ci < c.in_ch; ++ci)
            for (int dt = 0; dt < kt; ++dt)
              for (int dh = 0; dh < kh; ++dh)
                for (int dw = 0; dw < kw; ++dw) {
                  const int t = ot * kt + dt, h = oh * kh + dh,
                            x3 = ow * kw + dw;
                  if (t >= Td || h >= Hd || x3 >= Wd) continue;
                  acc += static_cast<std::int64_t>(
                             q.w[static_cast<std::size_t>(co) * c.in_ch *
                                     kvol +
                                 ci * kvol + (dt * kh + dh) * kw + dw]) *
                         x[((static_cast<std::size_t>(ci) * Td + t) * Hd + h) *
                               Wd +
                           x3];
                }
          out[((static_cast<std::size_t>(co) * To + ot) * Ho + oh) * Wo + ow] =
              sf_postprocess(acc, q.mult, q.shift, act, q.activate);
        }
  return out;
}

}  // namespace

QuantizedNetwork quantize(const NetworkSpec& spec, const Weights<float>& w,
                          const CalibrationStats& stats) {
  spec.validate();
  if (spec.hidden_act.kind == ActivationSpec::Kind::LeakyReLU &&
      spec.hidden_act.slope != 0.125)
    throw std::runtime_error(
        "integer datapath implements leaky slope 1/8 only");
  QuantizedNetwork qn;
  qn.spec = spec;
  float in_scale = checked_scale(stats.in_max, "network input");
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    QLayer q = make_qlayer(w.convs[l].w, w.convs[l].b, in_scale,
                           stats.frontend_max[l], true,
                           "conv " + std::to_string(l));
    q.kind = QLayer::Kind::Conv;
    q.conv = spec.convs[l];
    q.in_dims = spec.volume_before(l);
    auto out = spec.volume_before(l + 1);
    q.in_size = q.in_dims[0] * q.in_dims[1] * q.in_dims[2] * q.in_dims[3];
    q.out_size = out[0] * out[1] * out[2] * out[3];
    in_scale = q.out_scale;
    qn.frontend.push_back(std::move(q));
  }
  qn.frontend.push_back(make_qlayer(w.frontend.w, w.frontend.b, in_scale,
                                    stats.frontend_max[spec.convs.size()],
                                    true, "feature fc"));
  in_scale = qn.frontend.back().out_scale;
  for (int h = 0; h < spec.n_heads(); ++h) {
    QuantizedNetwork::QHead qh;
    qh.l1 = make_qlayer(w.heads[h].l1.w, w.heads[h].l1.b, in_scale,
                        stats.head_max[h][0], true,
                        "head " + std::to_string(h) + " hidden");
    qh.l2 = make_qlayer(w.heads[h].l2.w, w.heads[h].l2.b, qh.l1.out_scale,
                        stats.head_max[h][1], false,
                        "head " + std::to_string(h) + " logits");
    qn.heads.push_back(std::move(qh));
  }
  return qn;
}

QuantizedNetwork quantize(const NetworkSpec& spec, const Weights<float>& w,
                          const std::vector<VecX<float>>& calibration_inputs) {
  return quantize(spec, w, calibrate(spec, w, calibration_inputs));
}

QLogits forward_quantized(const QuantizedNetwork& qn,
                          const VecX<float>& input) {
  const auto& spec = qn.spec;
  if (input.size() != spec.input[0] * spec.input[1] * spec.input[2])
    throw std::invalid_argument("input size mismatch");
  const float in_scale = qn.frontend.front().in_scale;
  std::vector<std::int8_t> x(input.size());
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    std::int64_t v =
        round_half_away(static_cast<double>(input[i]) * in_scale);
    if (v > 127) v = 127;
    if (v < -128) v = -128;
    x[i] = static_cast<std::int8_t>(v);
  }
  const auto act = spec.hidden_act.kind;
  for (const auto& q : qn.frontend) x = apply_qlayer(q, act, x);
  QLogits out;
  for (const auto& h : qn.heads) {
    auto hid = apply_qlayer(h.l1, act, x);
    out.heads.push_back(apply_qlayer(h.l2, act, hid));
  }
  return out;
}

std::pair<int, BitVec> prediction_from_qlogits(const NetworkSpec& spec,
                                               const QLogits& lg) {
  Logits<float> fl;
  fl.class_logits.resize(lg.heads[0].size());
  for (std::size_t i = 0; i < lg.heads[0].size(); ++i)
    fl.class_logits[i] = lg.heads[0][i];
  for (std::size_t h = 1; h < lg.heads.size(); ++h) {
    VecX<float> v(lg.heads[h].size());
    for (std::size_t i = 0; i < lg.heads[h].size(); ++i)
      v[i] = lg.heads[h][i];
    fl.s_logits.push_back(std::move(v));
  }
  return prediction_from_logits(spec, fl);
}

std::vector<std::vector<float>> dequantize_logits(const QuantizedNetwork& qn,
                                                  const QLogits& lg) {
  std::vector<std::vector<float>> out;
  for (std::size_t h = 0; h < lg.heads.size(); ++h) {
    std::vector<float> v(lg.heads[h].size());
    for (std::size_t i = 0; i < lg.heads[h].size(); ++i)
      v[i] = static_cast<float>(lg.heads[h][i]) / qn.heads[h].l2.out_scale;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace rscw
