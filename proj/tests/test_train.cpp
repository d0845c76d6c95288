#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "rscw/train.hpp"
#include "rscw/rng.hpp"

using namespace rscw;

namespace {

// Small all-FC network on 6 input bits.
NetworkSpec fc_spec() {
  NetworkSpec spec;
  spec.type = StabType::X;
  spec.input = {1, 1, 6};
  spec.feature_width = 16;
  spec.head_hidden = 8;
  spec.piece_sizes = {2};
  return spec;
}

// Small network exercising every layer kind: conv, FC frontend, heads.
NetworkSpec conv_spec() {
  NetworkSpec spec;
  spec.type = StabType::Z;
  spec.input = {3, 4, 2};
  spec.convs = {Conv3dSpec{1, 3, {2, 2, 2}}};
  spec.feature_width = 6;
  spec.head_hidden = 4;
  spec.piece_sizes = {2, 1};
  return spec;
}

template <typename S>
MatX<S> random_inputs(int rows, int cols, std::uint64_t seed,
                      bool bits = false) {
  Rng rng(seed);
  MatX<S> x(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r)
      x(r, c) = bits ? static_cast<S>(rng.bernoulli(0.4))
                     : static_cast<S>(2.0 * rng.uniform() - 1.0);
  return x;
}

LabelSet random_labels(const NetworkSpec& spec, int n, std::uint64_t seed) {
  Rng rng(seed);
  LabelSet l;
  l.per_head.assign(spec.n_heads(), std::vector<int>(n));
  for (int h = 0; h < spec.n_heads(); ++h)
    for (int i = 0; i < n; ++i)
      l.per_head[h][i] = static_cast<int>(rng.below(spec.head_out(h)));
  return l;
}

// Task with exactly computable supervision from the input bits.
BatchedData<float> separable_task(int n, std::uint64_t seed) {
  auto spec = fc_spec();
  BatchedData<float> d;
  d.inputs = random_inputs<float>(6, n, seed, true);
  d.labels.per_head.assign(spec.n_heads(), std::vector<int>(n));
  for (int i = 0; i < n; ++i) {
    d.labels.per_head[0][i] = d.inputs(0, i) > 0.5f;
    d.labels.per_head[1][i] = (d.inputs(1, i) > 0.5f ? 1 : 0) |
                              ((d.inputs(2, i) > 0.5f ? 1 : 0) << 1);
  }
  return d;
}

}  // namespace

TEST_CASE("uniform logits cost the sum of log class counts") {
  // All-zero weights produce all-zero logits: each head contributes ln(C_h).
  auto spec = conv_spec();
  auto w = zero_weights<double>(spec);
  auto x = random_inputs<double>(3 * 4 * 2, 7, 1);
  auto labels = random_labels(spec, 7, 2);
  const double loss = loss_and_gradients<double>(spec, w, x, labels, nullptr);
  const double expect = std::log(2.0) + std::log(4.0) + std::log(2.0);
  CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("zero weights with balanced labels sit at a stationary point") {
  auto spec = fc_spec();
  auto w = zero_weights<double>(spec);
  auto x = random_inputs<double>(6, 4, 3);
  LabelSet labels;
  labels.per_head = {{0, 1, 0, 1}, {0, 1, 2, 3}};
  Gradients<double> g;
  loss_and_gradients<double>(spec, w, x, labels, &g);
  for (const auto* l : layer_list(g)) {
    CHECK(l->w.cwiseAbs().maxCoeff() == 0.0);
    CHECK(l->b.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  auto spec = conv_spec();
  auto w = init_weights<double>(spec, 11);
  // Nonzero biases so their gradients are exercised too.
  for (auto* l : layer_list(w))
    for (Eigen::Index i = 0; i < l->b.size(); ++i)
      l->b[i] = 0.05 * static_cast<double>(i % 5) - 0.1;
  auto x = random_inputs<double>(3 * 4 * 2, 5, 13);
  auto labels = random_labels(spec, 5, 17);
  Gradients<double> g;
  loss_and_gradients<double>(spec, w, x, labels, &g);

  Rng rng(23);
  auto layers = layer_list(w);
  auto grads = layer_list(g);
  const double h = 1e-5;
  int probes = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t li = rng.below(layers.size());
    LayerW<double>* lw = layers[li];
    const bool bias = rng.bernoulli(0.2) && lw->b.size() > 0;
    double* p;
    double analytic;
    if (bias) {
      const Eigen::Index i = rng.below(lw->b.size());
      p = &lw->b[i];
      analytic = grads[li]->b[i];
    } else {
      const Eigen::Index i = rng.below(lw->w.size());
      p = lw->w.data() + i;
      analytic = grads[li]->w.data()[i];
    }
    const double keep = *p;
    *p = keep + h;
    const double up = loss_and_gradients<double>(spec, w, x, labels, nullptr);
    *p = keep - h;
    const double dn = loss_and_gradients<double>(spec, w, x, labels, nullptr);
    *p = keep;
    const double numeric = (up - dn) / (2.0 * h);
    const double denom = std::max(1.0, std::abs(analytic) + std::abs(numeric));
    CHECK(std::abs(analytic - numeric) / denom < 1e-4);
    ++probes;
  }
  CHECK(probes == 120);
}

TEST_CASE("batch loss is the mean: duplicated samples change nothing") {
  auto spec = fc_spec();
  auto w = init_weights<double>(spec, 5);
  auto x1 = random_inputs<double>(6, 1, 31);
  MatX<double> x2(6, 2);
  x2 << x1, x1;
  LabelSet l1, l2;
  l1.per_head = {{1}, {2}};
  l2.per_head = {{1, 1}, {2, 2}};
  Gradients<double> g1, g2;
  const double a = loss_and_gradients<double>(spec, w, x1, l1, &g1);
  const double b = loss_and_gradients<double>(spec, w, x2, l2, &g2);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  auto p1 = layer_list(g1);
  auto p2 = layer_list(g2);
  for (std::size_t i = 0; i < p1.size(); ++i)
    CHECK((p1[i]->w - p2[i]->w).cwiseAbs().maxCoeff() <= 1e-12);
  // And a two-sample batch averages the two single-sample losses.
  auto y = random_inputs<double>(6, 1, 37);
  MatX<double> xy(6, 2);
  xy << x1, y;
  LabelSet ly, lxy;
  ly.per_head = {{0}, {3}};
  lxy.per_head = {{1, 0}, {2, 3}};
  const double ls = loss_and_gradients<double>(spec, w, y, ly, nullptr);
  const double lm = loss_and_gradients<double>(spec, w, xy, lxy, nullptr);
  CHECK(lm == doctest::Approx(0.5 * (a + ls)).epsilon(1e-12));
}

TEST_CASE("frontend gradient is the sum of per-head contributions") {
  auto spec = conv_spec();
  auto w = init_weights<double>(spec, 41);
  auto x = random_inputs<double>(3 * 4 * 2, 6, 43);
  auto labels = random_labels(spec, 6, 47);
  Gradients<double> full;
  loss_and_gradients<double>(spec, w, x, labels, &full);
  MatX<double> sum_fc = MatX<double>::Zero(full.frontend.w.rows(),
                                           full.frontend.w.cols());
  MatX<double> sum_conv = MatX<double>::Zero(full.convs[0].w.rows(),
                                             full.convs[0].w.cols());
  for (int h = 0; h < spec.n_heads(); ++h) {
    // Silencing every other head's output layer removes exactly its backflow
    // into the shared frontend (its logits go constant), nothing else.
    auto wh = w;
    for (int h2 = 0; h2 < spec.n_heads(); ++h2)
      if (h2 != h) wh.heads[h2].l2.w.setZero();
    Gradients<double> g;
    loss_and_gradients<double>(spec, wh, x, labels, &g);
    sum_fc += g.frontend.w;
    sum_conv += g.convs[0].w;
  }
  CHECK((full.frontend.w - sum_fc).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((full.convs[0].w - sum_conv).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("optimizer steps: zero learning rate, SGD momentum, Adam size") {
  auto spec = fc_spec();
  auto w0 = init_weights<float>(spec, 51);
  Gradients<float> g = zero_weights<float>(spec);
  g.frontend.w.setOnes();

  OptimizerConfig cfg;
  cfg.lr = 0.0;
  for (auto kind : {OptimizerConfig::Kind::SGD, OptimizerConfig::Kind::Adam}) {
    cfg.kind = kind;
    auto w = w0;
    auto st = make_optimizer_state<float>(spec);
    optimizer_step(cfg, w, g, st);
    CHECK(w.frontend.w == w0.frontend.w);
    CHECK(w.heads[0].l1.w == w0.heads[0].l1.w);
  }

  // SGD with momentum 0.5: step 1 moves by lr, step 2 by lr * 1.5.
  cfg.kind = OptimizerConfig::Kind::SGD;
  cfg.lr = 0.1;
  cfg.momentum = 0.5;
  {
    auto w = w0;
    auto st = make_optimizer_state<float>(spec);
    optimizer_step(cfg, w, g, st);
    CHECK(w.frontend.w(0, 0) ==
          doctest::Approx(w0.frontend.w(0, 0) - 0.1).epsilon(1e-6));
    optimizer_step(cfg, w, g, st);
    CHECK(w.frontend.w(0, 0) ==
          doctest::Approx(w0.frontend.w(0, 0) - 0.1 - 0.15).epsilon(1e-6));
    // Untouched layers stay put.
    CHECK(w.heads[0].l2.w == w0.heads[0].l2.w);
  }

  // Adam's first step has magnitude ~lr regardless of gradient scale.
  cfg.kind = OptimizerConfig::Kind::Adam;
  cfg.lr = 0.01;
  {
    auto w = w0;
    auto st = make_optimizer_state<float>(spec);
    auto g2 = g;
    g2.frontend.w *= 500.0f;
    optimizer_step(cfg, w, g2, st);
    CHECK(w.frontend.w(0, 0) ==
          doctest::Approx(w0.frontend.w(0, 0) - 0.01).epsilon(1e-3));
  }
}

TEST_CASE("training is deterministic in its seed") {
  auto data = separable_task(600, 61);
  auto spec = fc_spec();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  cfg.seed = 9;
  auto a = train(spec, data, cfg);
  auto b = train(spec, data, cfg);
  CHECK(a.weights.frontend.w == b.weights.frontend.w);
  CHECK(a.weights.heads[1].l2.w == b.weights.heads[1].l2.w);
  CHECK(a.epochs.back().train_loss == b.epochs.back().train_loss);
  cfg.seed = 10;
  auto c = train(spec, data, cfg);
  CHECK(a.weights.frontend.w != c.weights.frontend.w);
}

TEST_CASE("training learns bit-separable supervision") {
  auto data = separable_task(3000, 71);
  auto spec = fc_spec();
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.batch_size = 64;
  cfg.seed = 4;
  cfg.val_fraction = 0.2;
  cfg.opt.kind = OptimizerConfig::Kind::Adam;
  cfg.opt.lr = 5e-3;
  auto r = train(spec, data, cfg);
  REQUIRE(r.epochs.size() == 15);
  CHECK(r.epochs.back().train_loss < r.epochs.front().train_loss);
  CHECK(r.epochs.back().val_loss < r.epochs.front().val_loss);
  CHECK(r.epochs.back().val_head_accuracy[0] > 0.95);
  CHECK(r.epochs.back().val_head_accuracy[1] > 0.95);
}

TEST_CASE("divergence aborts with an error instead of silent NaNs") {
  auto data = separable_task(400, 81);
  auto spec = fc_spec();
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 32;
  cfg.opt.kind = OptimizerConfig::Kind::SGD;
  cfg.opt.lr = 1e12;
  CHECK_THROWS_AS(train(spec, data, cfg), std::runtime_error);
}

TEST_CASE("simulator samples map to inputs and per-head labels") {
  auto code = RscCode::build(3);
  auto params = NoiseParams::standard(0.01);
  auto data = generate_dataset(code, params, 3, 40, 515);
  auto spec = default_spec(code, 3, StabType::X);
  auto prepared = prepare_training_data(code, data, spec);
  REQUIRE(prepared.inputs.cols() == 40);
  REQUIRE(prepared.labels.per_head.size() == 2);  // class + one piece of 4
  for (int i : {0, 7, 39}) {
    const auto& s = data.samples[i];
    VecX<float> want = syndrome_to_input<float>(
        code, s.syndromes[static_cast<int>(StabType::X)], StabType::X);
    CHECK(prepared.inputs.col(i) == want);
    auto lab = labels_for_sample(
        spec, s.label_class[static_cast<int>(StabType::X)],
        s.label_s[static_cast<int>(StabType::X)]);
    for (int h = 0; h < spec.n_heads(); ++h)
      CHECK(prepared.labels.per_head[h][i] == lab[h]);
  }
  // Piece packing is little-endian within each head.
  BitVec s(4);
  s.set(0);
  s.set(2);
  s.set(3);
  auto lab = labels_for_sample(spec, 1, s);
  CHECK(lab[0] == 1);
  CHECK(lab[1] == 13);
  // Mismatched window length is rejected.
  auto spec5 = default_spec(code, 5, StabType::X);
  CHECK_THROWS_AS(prepare_training_data(code, data, spec5),
                  std::invalid_argument);
}

TEST_CASE("evaluate agrees with the loss function and counts argmaxes") {
  auto spec = fc_spec();
  auto w = init_weights<float>(spec, 91);
  auto x = random_inputs<float>(6, 300, 93, true);
  auto labels = random_labels(spec, 300, 95);
  auto [loss, acc] = evaluate(spec, w, x, labels);
  const double direct = loss_and_gradients<float>(spec, w, x, labels, nullptr);
  CHECK(loss == doctest::Approx(direct).epsilon(1e-4));
  REQUIRE(acc.size() == 2);
  for (double a : acc) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}
