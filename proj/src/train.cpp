#include "rscw/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "rscw/rng.hpp"

namespace rscw {

std::vector<int> labels_for_sample(const NetworkSpec& spec, int class_bit,
                                   const BitVec& s) {
  if (s.size() != static_cast<std::size_t>(spec.syndrome_bits()))
    throw std::invalid_argument("syndrome label width mismatch");
  std::vector<int> out;
  out.push_back(class_bit);
  int base = 0;
  for (int piece : spec.piece_sizes) {
    int idx = 0;
    for (int b = 0; b < piece; ++b)
      if (s.get(base + b)) idx |= 1 << b;
    out.push_back(idx);
    base += piece;
  }
  return out;
}

BatchedData<float> prepare_training_data(const RscCode& code,
                                         const Dataset& data,
                                         const NetworkSpec& spec) {
  spec.validate();
  const int t = static_cast<int>(spec.type);
  const Eigen::Index N = static_cast<Eigen::Index>(data.samples.size());
  if (N == 0) throw std::invalid_argument("empty dataset");
  if (data.rounds != spec.input[0])
    throw std::invalid_argument("dataset rounds do not match the network");
  BatchedData<float> out;
  out.inputs.resize(
      static_cast<Eigen::Index>(spec.input[0]) * spec.input[1] * spec.input[2],
      N);
  out.labels.per_head.assign(spec.n_heads(), std::vector<int>(N));
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& sample = data.samples[i];
    out.inputs.col(i) =
        syndrome_to_input<float>(code, sample.syndromes[t], spec.type);
    auto lab = labels_for_sample(spec, sample.label_class[t],
                                 sample.label_s[t]);
    for (int h = 0; h < spec.n_heads(); ++h)
      out.labels.per_head[h][i] = lab[h];
  }
  return out;
}

std::pair<double, std::vector<double>> evaluate(const NetworkSpec& spec,
                                                const Weights<float>& w,
                                                const MatX<float>& inputs,
                                                const LabelSet& labels) {
  const Eigen::Index N = inputs.cols();
  if (N == 0) throw std::invalid_argument("empty evaluation set");
  double loss = 0.0;
  std::vector<double> correct(spec.n_heads(), 0.0);
  const Eigen::Index chunk = 2048;
  for (Eigen::Index start = 0; start < N; start += chunk) {
    const Eigen::Index n = std::min(chunk, N - start);
    MatX<float> x = inputs.middleCols(start, n);
    HeadLogitsBatch<float> lg = batch_forward<float>(spec, w, x, nullptr);
    for (int h = 0; h < spec.n_heads(); ++h) {
      const MatX<float>& m = lg.heads[h];
      for (Eigen::Index c = 0; c < n; ++c) {
        const int label = labels.per_head[h][start + c];
        const float mx = m.col(c).maxCoeff();
        const double z =
            static_cast<double>((m.col(c).array() - mx).exp().sum());
        loss += std::log(z) + mx - m(label, c);
        Eigen::Index best = 0;
        for (Eigen::Index r = 1; r < m.rows(); ++r)
          if (m(r, c) > m(best, c)) best = r;
        correct[h] += best == label;
      }
    }
  }
  std::vector<double> acc;
  for (double c : correct) acc.push_back(c / static_cast<double>(N));
  return {loss / static_cast<double>(N), acc};
}

TrainResult train(const NetworkSpec& spec, const BatchedData<float>& data,
                  const TrainConfig& cfg) {
  spec.validate();
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw std::invalid_argument("epochs and batch size must be positive");
  if (!(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0))
    throw std::invalid_argument("val_fraction must be in [0, 1)");
  const Eigen::Index N = data.inputs.cols();
  const Eigen::Index n_val =
      static_cast<Eigen::Index>(std::llround(cfg.val_fraction * N));
  const Eigen::Index n_train = N - n_val;
  if (n_train < 1) throw std::invalid_argument("no training samples");

  TrainResult result;
  result.weights = init_weights<float>(spec, cfg.seed);
  auto opt_state = make_optimizer_state<float>(spec);

  LabelSet val_labels;
  if (n_val > 0) {
    val_labels.per_head.assign(spec.n_heads(), {});
    for (int h = 0; h < spec.n_heads(); ++h)
      val_labels.per_head[h].assign(
          data.labels.per_head[h].begin() + n_train,
          data.labels.per_head[h].end());
  }

  std::vector<Eigen::Index> order(n_train);
  std::iota(order.begin(), order.end(), 0);
  const int n_heads = spec.n_heads();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::mt19937_64 shuffler(Rng::derive(cfg.seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), shuffler);
    double loss_sum = 0.0;
    Gradients<float> g;
    for (Eigen::Index start = 0; start < n_train; start += cfg.batch_size) {
      const Eigen::Index bs =
          std::min<Eigen::Index>(cfg.batch_size, n_train - start);
      MatX<float> bx(data.inputs.rows(), bs);
      LabelSet bl;
      bl.per_head.assign(n_heads, std::vector<int>(bs));
      for (Eigen::Index j = 0; j < bs; ++j) {
        const Eigen::Index src = order[start + j];
        bx.col(j) = data.inputs.col(src);
        for (int h = 0; h < n_heads; ++h)
          bl.per_head[h][j] = data.labels.per_head[h][src];
      }
      const float loss = loss_and_gradients(spec, result.weights, bx, bl, &g);
      if (!std::isfinite(loss))
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      optimizer_step(cfg.opt, result.weights, g, opt_state);
      loss_sum += static_cast<double>(loss) * static_cast<double>(bs);
    }
    EpochStats es;
    es.epoch = epoch;
    es.train_loss = loss_sum / static_cast<double>(n_train);
    if (n_val > 0) {
      MatX<float> vx = data.inputs.middleCols(n_train, n_val);
      auto [vloss, vacc] = evaluate(spec, result.weights, vx, val_labels);
      es.val_loss = vloss;
      es.val_head_accuracy = vacc;
    }
    if (cfg.on_epoch) cfg.on_epoch(es);
    result.epochs.push_back(std::move(es));
  }
  return result;
}

}  // namespace rscw
