#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rscw/network.hpp"
#include "rscw/noise.hpp"

namespace rscw {

// Gradients share the weight layout exactly.
template <typename S>
using Gradients = Weights<S>;

template <typename S>
std::vector<LayerW<S>*> layer_list(Weights<S>& w) {
  std::vector<LayerW<S>*> v;
  for (auto& c : w.convs) v.push_back(&c);
  v.push_back(&w.frontend);
  for (auto& h : w.heads) {
    v.push_back(&h.l1);
    v.push_back(&h.l2);
  }
  return v;
}

template <typename S>
std::vector<const LayerW<S>*> layer_list(const Weights<S>& w) {
  std::vector<const LayerW<S>*> v;
  for (const auto& c : w.convs) v.push_back(&c);
  v.push_back(&w.frontend);
  for (const auto& h : w.heads) {
    v.push_back(&h.l1);
    v.push_back(&h.l2);
  }
  return v;
}

template <typename S>
Weights<S> zero_weights(const NetworkSpec& spec) {
  Weights<S> w = init_weights<S>(spec, 0);
  for (auto* l : layer_list(w)) {
    l->w.setZero();
    l->b.setZero();
  }
  return w;
}

// Per-head integer class labels, one entry per sample: head 0 is the
// homology class bit, head j > 0 the j-th syndrome piece read as an integer.
struct LabelSet {
  std::vector<std::vector<int>> per_head;  // [head][sample]
  std::size_t size() const {
    return per_head.empty() ? 0 : per_head[0].size();
  }
};

template <typename S>
struct BatchedData {
  MatX<S> inputs;  // one column per sample
  LabelSet labels;
};

// Extracts the inputs and supervision consumed by a network of spec.type
// from simulator-labeled samples.
BatchedData<float> prepare_training_data(const RscCode& code,
                                         const Dataset& data,
                                         const NetworkSpec& spec);

// Per-head class indices for one sample's supervision.
std::vector<int> labels_for_sample(const NetworkSpec& spec, int class_bit,
                                   const BitVec& s);

template <typename S>
struct BatchState {
  std::vector<MatX<S>> acts;     // acts[0] = input, then frontend outputs
  std::vector<MatX<S>> preacts;  // frontend pre-activations
  std::vector<MatX<S>> head_pre1, head_act1;
};

template <typename S>
struct HeadLogitsBatch {
  std::vector<MatX<S>> heads;  // [head]: out_h x batch
};

template <typename S>
S activation_derivative(S pre, const ActivationSpec& a) {
  if (pre >= S(0)) return S(1);
  return a.kind == ActivationSpec::Kind::ReLU ? S(0)
                                              : static_cast<S>(a.slope);
}

template <typename S>
HeadLogitsBatch<S> batch_forward(const NetworkSpec& spec, const Weights<S>& w,
                                 const MatX<S>& input, BatchState<S>* st) {
  const Eigen::Index B = input.cols();
  if (st) {
    st->acts.clear();
    st->preacts.clear();
    st->head_pre1.clear();
    st->head_act1.clear();
  }
  MatX<S> x = input;
  if (st) st->acts.push_back(x);
  auto act = [&](S v) { return activate_scalar<S>(v, spec.hidden_act); };
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    const auto in_dims = spec.volume_before(l);
    const auto out_dims = spec.volume_before(l + 1);
    const int out_flat = out_dims[0] * out_dims[1] * out_dims[2] * out_dims[3];
    MatX<S> pre(out_flat, B);
    for (Eigen::Index s = 0; s < B; ++s) {
      VecX<S> col = x.col(s);
      MatX<S> patches = im2col(spec.convs[l], in_dims, col);
      MatX<S> out = (w.convs[l].w * patches).colwise() + w.convs[l].b;
      pre.col(s) = flatten_channels(out);
    }
    x = pre.unaryExpr(act);
    if (st) {
      st->preacts.push_back(std::move(pre));
      st->acts.push_back(x);
    }
  }
  {
    MatX<S> pre = (w.frontend.w * x).colwise() + w.frontend.b;
    x = pre.unaryExpr(act);
    if (st) {
      st->preacts.push_back(std::move(pre));
      st->acts.push_back(x);
    }
  }
  HeadLogitsBatch<S> out;
  for (int h = 0; h < spec.n_heads(); ++h) {
    MatX<S> pre1 = (w.heads[h].l1.w * x).colwise() + w.heads[h].l1.b;
    MatX<S> act1 = pre1.unaryExpr(act);
    out.heads.push_back((w.heads[h].l2.w * act1).colwise() + w.heads[h].l2.b);
    if (st) {
      st->head_pre1.push_back(std::move(pre1));
      st->head_act1.push_back(std::move(act1));
    }
  }
  return out;
}

// Loss: mean over the batch of the per-sample sum of per-head softmax
// cross-entropies.  Fills `g` (same shape as the weights) when non-null.
template <typename S>
S loss_and_gradients(const NetworkSpec& spec, const Weights<S>& w,
                     const MatX<S>& input, const LabelSet& labels,
                     Gradients<S>* g) {
  const Eigen::Index B = input.cols();
  if (B == 0) throw std::invalid_argument("empty batch");
  if (labels.per_head.size() != static_cast<std::size_t>(spec.n_heads()) ||
      labels.size() != static_cast<std::size_t>(B))
    throw std::invalid_argument("label/batch shape mismatch");
  BatchState<S> st;
  HeadLogitsBatch<S> logits = batch_forward(spec, w, input, &st);

  S total = S(0);
  std::vector<MatX<S>> dlogits(logits.heads.size());
  for (std::size_t h = 0; h < logits.heads.size(); ++h) {
    const MatX<S>& lg = logits.heads[h];
    MatX<S> d(lg.rows(), lg.cols());
    for (Eigen::Index c = 0; c < lg.cols(); ++c) {
      const int label = labels.per_head[h][c];
      if (label < 0 || label >= lg.rows())
        throw std::invalid_argument("label out of range");
      const S m = lg.col(c).maxCoeff();
      VecX<S> e = (lg.col(c).array() - m).exp();
      const S z = e.sum();
      total += std::log(z) + m - lg(label, c);
      if (g) {
        d.col(c) = e / z;
        d(label, c) -= S(1);
        d.col(c) /= static_cast<S>(B);
      }
    }
    if (g) dlogits[h] = std::move(d);
  }
  total /= static_cast<S>(B);
  if (!g) return total;

  *g = zero_weights<S>(spec);
  const MatX<S>& feat = st.acts.back();
  MatX<S> dfeat = MatX<S>::Zero(feat.rows(), feat.cols());
  for (int h = 0; h < spec.n_heads(); ++h) {
    const auto& head = w.heads[h];
    auto& gh = g->heads[h];
    gh.l2.w = dlogits[h] * st.head_act1[h].transpose();
    gh.l2.b = dlogits[h].rowwise().sum();
    MatX<S> dact1 = head.l2.w.transpose() * dlogits[h];
    MatX<S> dpre1 =
        dact1.array() * st.head_pre1[h].unaryExpr([&](S v) {
          return activation_derivative<S>(v, spec.hidden_act);
        }).array();
    gh.l1.w = dpre1 * feat.transpose();
    gh.l1.b = dpre1.rowwise().sum();
    dfeat += head.l1.w.transpose() * dpre1;
  }

  // Frontend FC, then convs in reverse.
  MatX<S> dx = std::move(dfeat);
  {
    const std::size_t u = spec.convs.size();  // frontend FC unit index
    MatX<S> dpre = dx.array() * st.preacts[u].unaryExpr([&](S v) {
      return activation_derivative<S>(v, spec.hidden_act);
    }).array();
    g->frontend.w = dpre * st.acts[u].transpose();
    g->frontend.b = dpre.rowwise().sum();
    dx = w.frontend.w.transpose() * dpre;
  }
  for (int l = static_cast<int>(spec.convs.size()) - 1; l >= 0; --l) {
    const auto in_dims = spec.volume_before(l);
    const auto out_dims = spec.volume_before(l + 1);
    const Eigen::Index sites =
        static_cast<Eigen::Index>(out_dims[1]) * out_dims[2] * out_dims[3];
    MatX<S> dpre = dx.array() * st.preacts[l].unaryExpr([&](S v) {
      return activation_derivative<S>(v, spec.hidden_act);
    }).array();
    MatX<S> dw = MatX<S>::Zero(w.convs[l].w.rows(), w.convs[l].w.cols());
    VecX<S> db = VecX<S>::Zero(w.convs[l].b.size());
    MatX<S> dxprev(st.acts[l].rows(), st.acts[l].cols());
    for (Eigen::Index s = 0; s < dpre.cols(); ++s) {
      // Unflatten the channel-major column into (out_ch x sites).
      MatX<S> dout(out_dims[0], sites);
      for (Eigen::Index co = 0; co < out_dims[0]; ++co)
        for (Eigen::Index k = 0; k < sites; ++k)
          dout(co, k) = dpre(co * sites + k, s);
      VecX<S> col = st.acts[l].col(s);
      MatX<S> patches = im2col(spec.convs[l], in_dims, col);
      dw += dout * patches.transpose();
      db += dout.rowwise().sum();
      MatX<S> dpatches = w.convs[l].w.transpose() * dout;
      dxprev.col(s) = col2im(spec.convs[l], in_dims, dpatches);
    }
    g->convs[l].w = std::move(dw);
    g->convs[l].b = std::move(db);
    dx = std::move(dxprev);
  }
  return total;
}

struct OptimizerConfig {
  enum class Kind : std::uint8_t { SGD = 0, Adam = 1 };
  Kind kind = Kind::Adam;
  double lr = 1e-3;
  double momentum = 0.9;  // SGD only
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;  // Adam only
};

template <typename S>
struct OptimizerState {
  Weights<S> m, v;  // SGD keeps its velocity in m
  std::int64_t t = 0;
};

template <typename S>
OptimizerState<S> make_optimizer_state(const NetworkSpec& spec) {
  return {zero_weights<S>(spec), zero_weights<S>(spec), 0};
}

template <typename S>
void optimizer_step(const OptimizerConfig& cfg, Weights<S>& w,
                    const Gradients<S>& g, OptimizerState<S>& st) {
  auto ws = layer_list(w);
  auto gs = layer_list(g);
  auto ms = layer_list(st.m);
  auto vs = layer_list(st.v);
  ++st.t;
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (cfg.kind == OptimizerConfig::Kind::SGD) {
      ms[i]->w = static_cast<S>(cfg.momentum) * ms[i]->w + gs[i]->w;
      ms[i]->b = static_cast<S>(cfg.momentum) * ms[i]->b + gs[i]->b;
      ws[i]->w -= static_cast<S>(cfg.lr) * ms[i]->w;
      ws[i]->b -= static_cast<S>(cfg.lr) * ms[i]->b;
      continue;
    }
    const S b1 = static_cast<S>(cfg.beta1), b2 = static_cast<S>(cfg.beta2);
    const S c1 = S(1) - std::pow(b1, static_cast<S>(st.t));
    const S c2 = S(1) - std::pow(b2, static_cast<S>(st.t));
    auto step = [&](auto& mw, auto& vw, auto& ww, const auto& gw) {
      mw = b1 * mw + (S(1) - b1) * gw;
      vw = b2 * vw + (S(1) - b2) * gw.cwiseProduct(gw);
      ww -= (static_cast<S>(cfg.lr) * (mw / c1).array() /
             ((vw / c2).array().sqrt() + static_cast<S>(cfg.eps)))
                .matrix();
    };
    step(ms[i]->w, vs[i]->w, ws[i]->w, gs[i]->w);
    step(ms[i]->b, vs[i]->b, ws[i]->b, gs[i]->b);
  }
}

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::vector<double> val_head_accuracy;  // [head]
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 128;
  OptimizerConfig opt;
  std::uint64_t seed = 1;
  double val_fraction = 0.1;
  std::function<void(const EpochStats&)> on_epoch;  // optional
};

struct TrainResult {
  Weights<float> weights;
  std::vector<EpochStats> epochs;
};

// Mean loss and per-head argmax accuracy over a labeled set (chunked).
std::pair<double, std::vector<double>> evaluate(const NetworkSpec& spec,
                                                const Weights<float>& w,
                                                const MatX<float>& inputs,
                                                const LabelSet& labels);

// Mini-batch training with deterministic shuffling; throws on non-finite
// loss.  The last val_fraction of the data is held out for evaluation.
TrainResult train(const NetworkSpec& spec, const BatchedData<float>& data,
                  const TrainConfig& cfg);

}  // namespace rscw
