#include "rscw/network.hpp"

#include <cmath>

#include "rscw/rng.hpp"

namespace rscw {

void NetworkSpec::validate() const {
  for (int a = 0; a < 3; ++a)
    if (input[a] < 1) throw std::invalid_argument("input dims must be >= 1");
  int ch = 1;
  for (const auto& c : convs) {
    if (c.in_ch != ch)
      throw std::invalid_argument("conv channel chain mismatch");
    if (c.out_ch < 1) throw std::invalid_argument("conv out_ch must be >= 1");
    for (int a = 0; a < 3; ++a)
      if (c.kernel[a] < 1)
        throw std::invalid_argument("conv kernel must be >= 1");
    ch = c.out_ch;
  }
  if (feature_width < 1 || head_hidden < 1)
    throw std::invalid_argument("layer widths must be >= 1");
  if (piece_sizes.empty())
    throw std::invalid_argument("at least one syndrome piece required");
  for (int p : piece_sizes)
    if (p < 1 || p > 16)
      throw std::invalid_argument("piece sizes must be in [1, 16]");
  if (hidden_act.kind == ActivationSpec::Kind::LeakyReLU &&
      !(hidden_act.slope > 0.0 && hidden_act.slope < 1.0))
    throw std::invalid_argument("leaky slope must be in (0, 1)");
}

int default_rounds(int distance) {
  switch (distance) {
    case 3: return 3;
    case 5: return 10;
    case 7: return 14;
    case 9: return 12;
    case 11: return 11;
    default: return distance;
  }
}

namespace {

// Shared construction: stepper convs with kernel 2 clamped to the remaining
// volume, stacked until either the requested depth for this distance is
// reached or the volume has shrunk to a single site.
NetworkSpec build_spec(const RscCode& code, int T, StabType type, int channels,
                       int feature_width, int head_hidden) {
  if (T < 1) throw std::invalid_argument("rounds must be >= 1");
  NetworkSpec spec;
  spec.type = type;
  auto [H, W] = code.grid_shape(type);
  spec.input = {T, H, W};
  spec.feature_width = feature_width;
  spec.head_hidden = head_hidden;

  const int requested = std::max(0, code.distance() - 4);
  int ch = 1;
  std::array<int, 3> dims{T, H, W};
  for (int i = 0; i < requested; ++i) {
    if (dims[0] * dims[1] * dims[2] <= 1) break;
    Conv3dSpec c;
    c.in_ch = ch;
    c.out_ch = channels;
    for (int a = 0; a < 3; ++a) c.kernel[a] = std::min(2, dims[a]);
    spec.convs.push_back(c);
    ch = channels;
    for (int a = 0; a < 3; ++a)
      dims[a] = (dims[a] + c.kernel[a] - 1) / c.kernel[a];
  }

  const int bits = code.n_stabilizers(type);
  for (int done = 0; done < bits; done += 4)
    spec.piece_sizes.push_back(std::min(4, bits - done));
  spec.validate();
  return spec;
}

}  // namespace

NetworkSpec default_spec(const RscCode& code, int T, StabType type) {
  return build_spec(code, T, type, /*channels=*/8, /*feature_width=*/128,
                    /*head_hidden=*/64);
}

NetworkSpec wide_spec(const RscCode& code, int T, StabType type) {
  return build_spec(code, T, type, /*channels=*/16, /*feature_width=*/512,
                    /*head_hidden=*/64);
}

std::int64_t count_multiplications(const NetworkSpec& spec) {
  std::int64_t total = 0;
  for (std::size_t l = 0; l < spec.convs.size(); ++l) {
    const auto& c = spec.convs[l];
    const auto out = spec.volume_before(l + 1);
    const std::int64_t sites =
        static_cast<std::int64_t>(out[1]) * out[2] * out[3];
    const int kvol = c.kernel[0] * c.kernel[1] * c.kernel[2];
    total += sites * c.out_ch * (static_cast<std::int64_t>(c.in_ch) * kvol);
  }
  total += static_cast<std::int64_t>(spec.frontend_fc_in()) *
           spec.feature_width;
  for (int h = 0; h < spec.n_heads(); ++h)
    total += static_cast<std::int64_t>(spec.feature_width) * spec.head_hidden +
             static_cast<std::int64_t>(spec.head_hidden) * spec.head_out(h);
  return total;
}

std::int64_t count_parameters(const NetworkSpec& spec) {
  std::int64_t total = 0;
  for (const auto& c : spec.convs) {
    const int kvol = c.kernel[0] * c.kernel[1] * c.kernel[2];
    total += static_cast<std::int64_t>(c.out_ch) * c.in_ch * kvol + c.out_ch;
  }
  total += static_cast<std::int64_t>(spec.frontend_fc_in()) *
               spec.feature_width +
           spec.feature_width;
  for (int h = 0; h < spec.n_heads(); ++h)
    total += static_cast<std::int64_t>(spec.feature_width) * spec.head_hidden +
             spec.head_hidden +
             static_cast<std::int64_t>(spec.head_hidden) * spec.head_out(h) +
             spec.head_out(h);
  return total;
}

namespace {

template <typename S>
LayerW<S> glorot_layer(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  LayerW<S> l;
  l.w.resize(rows, cols);
  const double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      l.w(r, c) = static_cast<S>((2.0 * rng.uniform() - 1.0) * lim);
  l.b = VecX<S>::Zero(rows);
  return l;
}

}  // namespace

template <typename S>
Weights<S> init_weights(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Weights<S> w;
  for (const auto& c : spec.convs) {
    const int kvol = c.kernel[0] * c.kernel[1] * c.kernel[2];
    w.convs.push_back(glorot_layer<S>(c.out_ch, c.in_ch * kvol, rng));
  }
  w.frontend =
      glorot_layer<S>(spec.feature_width, spec.frontend_fc_in(), rng);
  for (int h = 0; h < spec.n_heads(); ++h) {
    typename Weights<S>::Head head;
    head.l1 = glorot_layer<S>(spec.head_hidden, spec.feature_width, rng);
    head.l2 = glorot_layer<S>(spec.head_out(h), spec.head_hidden, rng);
    w.heads.push_back(std::move(head));
  }
  return w;
}

template Weights<float> init_weights<float>(const NetworkSpec&, std::uint64_t);
template Weights<double> init_weights<double>(const NetworkSpec&,
                                              std::uint64_t);

}  // namespace rscw
