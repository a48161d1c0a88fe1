#include "hebb/layers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <span>
#include <string>

#include "hebb/errors.hpp"
#include "hebb/random.hpp"

namespace hebb {

std::string to_string(ActivationMode mode) {
  switch (mode.kind) {
    case ActivationKind::WtaBinary: return "wta";
    case ActivationKind::KWta: return "kwta:" + std::to_string(mode.k);
    case ActivationKind::Triangle: return "triangle";
  }
  return "?";
}

std::optional<ActivationMode> parse_activation(std::string_view text) {
  if (text == "wta") return ActivationMode::wta();
  if (text == "triangle") return ActivationMode::triangle();
  if (text.starts_with("kwta:")) {
    const std::string digits(text.substr(5));
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), ::isdigit)) return std::nullopt;
    const int k = std::stoi(digits);
    if (k < 1) return std::nullopt;
    return ActivationMode::kwta(k);
  }
  return std::nullopt;
}

NetworkConfig NetworkConfig::preset(std::string_view name) {
  NetworkConfig cfg;
  cfg.layers = {
      LayerSpec{100, 5, ActivationMode::wta(), 1, 1.0},
      LayerSpec{196, 3, ActivationMode::wta(), 1, 1.0},
      LayerSpec{400, 3, ActivationMode::wta(), 1, 1.0},
  };
  if (name == "default") return cfg;
  if (name == "triangle-pruned") {
    for (std::size_t l = 1; l < cfg.layers.size(); ++l) {
      cfg.layers[l].activation = ActivationMode::triangle();
      cfg.layers[l].prune_density = 0.01;
    }
    return cfg;
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected default or triangle-pruned)");
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (layers.empty()) fail("at least one layer required");
  if (input_channels < 1 || input_size < 1) fail("input dims must be positive");
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (!(threshold_rate >= 0.0)) fail("threshold_rate must be >= 0");
  if (!(ema_horizon > 0.0)) fail("ema_horizon must be > 0");
  if (!(zca_epsilon >= 0.0)) fail("zca_epsilon must be >= 0");
  if (!(ridge_scale >= 0.0)) fail("ridge_scale must be >= 0");
  int size = input_size;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& s = layers[l];
    const std::string tag = "layer" + std::to_string(l + 1) + ": ";
    if (s.filters < 1 || s.kernel < 1) fail(tag + "filters and kernel must be >= 1");
    if (!(s.prune_density > 0.0 && s.prune_density <= 1.0)) fail(tag + "prune_density must be in (0, 1]");
    if (s.plasticity_k < 1 || s.plasticity_k > s.filters) fail(tag + "plasticity_k must be in [1, filters]");
    if (s.activation.kind == ActivationKind::KWta && (s.activation.k < 1 || s.activation.k > s.filters)) {
      fail(tag + "kwta k must be in [1, filters]");
    }
    if (s.activation.kind == ActivationKind::Triangle && s.filters < 2) fail(tag + "triangle needs >= 2 filters");
    size = size - s.kernel + 1;
    if (size < 2 || size % 2 != 0) {
      fail(tag + "conv output size " + std::to_string(size) + " cannot be 2x2 pooled");
    }
    size /= 2;
  }
}

ConvLayer ConvLayer::create(const LayerSpec& spec, int in_channels, std::uint64_t seed) {
  ConvLayer layer;
  const Shape4 shape{spec.filters, in_channels, spec.kernel, spec.kernel};
  layer.weights = WeightTensor(shape);
  layer.mask = WeightTensor(shape, 1.0f);
  layer.activation = spec.activation;
  layer.plasticity_k = spec.plasticity_k;

  Rng rng(seed);
  const int fan_in = static_cast<int>(layer.weights.fan_in());
  if (spec.prune_density < 1.0) {
    const int keep = std::max(1, static_cast<int>(std::ceil(spec.prune_density * fan_in - 1e-9)));
    std::vector<int> idx(fan_in);
    for (int o = 0; o < spec.filters; ++o) {
      std::iota(idx.begin(), idx.end(), 0);
      auto m = layer.mask.filter(o);
      std::fill(m.begin(), m.end(), 0.0f);
      // Partial Fisher-Yates: first `keep` slots are a uniform sample without replacement.
      for (int i = 0; i < keep; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(fan_in - i)));
        std::swap(idx[i], idx[j]);
        m[idx[i]] = 1.0f;
      }
    }
  }
  for (float& v : layer.weights.data()) v = static_cast<float>(rng.normal());
  layer.bias.assign(spec.filters, 0.0f);
  layer.rate_ema.assign(spec.filters, static_cast<float>(layer.target_rate()));
  apply_mask_and_normalize(layer, derive_seed(seed, 0xB0));
  return layer;
}

Tensor4 wta_select(const Tensor4& activation, int k) {
  const Shape4& s = activation.shape();
  if (k < 1 || k > s.c) {
    throw std::invalid_argument("wta_select: k=" + std::to_string(k) + " outside [1, " + std::to_string(s.c) + "]");
  }
  Tensor4 out(s, 0.0f);
  const std::size_t plane = s.plane();
  std::vector<int> order(s.c);
  std::vector<float> best_v(plane);
  std::vector<int> best(plane);
  for (int b = 0; b < s.n; ++b) {
    const float* in = activation.item(b).data();
    float* dst = out.item(b).data();
    if (k == 1) {
      // Channel-outer sweep; strict > keeps the lowest index on ties.
      std::copy(in, in + plane, best_v.begin());
      std::fill(best.begin(), best.end(), 0);
      for (int c = 1; c < s.c; ++c) {
        const float* row = in + c * plane;
        for (std::size_t p = 0; p < plane; ++p) {
          if (row[p] > best_v[p]) {
            best_v[p] = row[p];
            best[p] = c;
          }
        }
      }
      for (std::size_t p = 0; p < plane; ++p) dst[best[p] * plane + p] = 1.0f;
      continue;
    }
    for (std::size_t p = 0; p < plane; ++p) {
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int c) {
        const float va = in[a * plane + p];
        const float vc = in[c * plane + p];
        return va > vc || (va == vc && a < c);
      });
      for (int r = 0; r < k; ++r) dst[order[r] * plane + p] = 1.0f;
    }
  }
  return out;
}

Tensor4 triangle_activation(const Tensor4& activation) {
  const Shape4& s = activation.shape();
  Tensor4 out(s, 0.0f);
  const std::size_t plane = s.plane();
  for (int b = 0; b < s.n; ++b) {
    const float* in = activation.item(b).data();
    float* dst = out.item(b).data();
    for (std::size_t p = 0; p < plane; ++p) {
      double mean = 0.0;
      for (int c = 0; c < s.c; ++c) mean += in[c * plane + p];
      mean /= s.c;
      for (int c = 0; c < s.c; ++c) {
        const double v = in[c * plane + p] - mean;
        dst[c * plane + p] = v > 0.0 ? static_cast<float>(v) : 0.0f;
      }
    }
  }
  return out;
}

void update_thresholds(ConvLayer& layer, std::span<const double> win_fraction, double ema_alpha,
                       double threshold_rate) {
  if (win_fraction.size() != static_cast<std::size_t>(layer.filters())) {
    throw ShapeError("update_thresholds: " + std::to_string(win_fraction.size()) + " win rates, layer has " +
                     std::to_string(layer.filters()) + " filters");
  }
  const double target = layer.target_rate();
  for (int c = 0; c < layer.filters(); ++c) {
    const double rate = (1.0 - ema_alpha) * layer.rate_ema[c] + ema_alpha * win_fraction[c];
    layer.rate_ema[c] = static_cast<float>(std::clamp(rate, 0.0, 1.0));
    layer.bias[c] = static_cast<float>(layer.bias[c] + threshold_rate * (target - layer.rate_ema[c]));
  }
}

namespace {

void count_wins(const Tensor4& y, std::vector<double>& wins) {
  const Shape4& s = y.shape();
  for (int b = 0; b < s.n; ++b)
    for (int c = 0; c < s.c; ++c) {
      const float* p = y.item(b).data() + c * s.plane();
      for (std::size_t q = 0; q < s.plane(); ++q) wins[c] += p[q];
    }
}

}  // namespace

void update_thresholds(ConvLayer& layer, const Tensor4& plasticity_output, double ema_alpha,
                       double threshold_rate) {
  const Shape4& s = plasticity_output.shape();
  if (s.c != layer.filters()) {
    throw ShapeError("update_thresholds: output has " + std::to_string(s.c) + " channels, layer has " +
                     std::to_string(layer.filters()));
  }
  std::vector<double> wins(s.c, 0.0);
  count_wins(plasticity_output, wins);
  const double columns = static_cast<double>(s.n) * s.plane();
  for (double& w : wins) w /= columns;
  update_thresholds(layer, wins, ema_alpha, threshold_rate);
}

void apply_mask_and_normalize(ConvLayer& layer, std::uint64_t rescue_seed) {
  const int filters = layer.filters();
  for (int o = 0; o < filters; ++o) {
    auto w = layer.weights.filter(o);
    const auto m = layer.mask.filter(o);
    double sq = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] *= m[k];
      sq += static_cast<double>(w[k]) * w[k];
    }
    if (!(sq > 0.0) || !std::isfinite(sq)) {
      Rng rng(derive_seed(rescue_seed, static_cast<std::uint64_t>(o)));
      sq = 0.0;
      while (!(sq > 0.0)) {
        for (std::size_t k = 0; k < w.size(); ++k) {
          w[k] = static_cast<float>(rng.normal()) * m[k];
          sq += static_cast<double>(w[k]) * w[k];
        }
      }
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (float& v : w) v = static_cast<float>(v * inv);
  }
}

LayerSignals layer_signals(const ConvLayer& layer, const Tensor4& input) {
  LayerSignals s;
  s.x = standardize_sample(input);
  s.preact = conv2d_valid(s.x, layer.weights);
  s.biased = s.preact;
  const Shape4& sh = s.biased.shape();
  for (int b = 0; b < sh.n; ++b) {
    float* p = s.biased.item(b).data();
    for (int c = 0; c < sh.c; ++c) {
      const float bias = layer.bias[c];
      for (std::size_t q = 0; q < sh.plane(); ++q) p[c * sh.plane() + q] += bias;
    }
  }
  return s;
}

Tensor4 layer_activation(const ConvLayer& layer, const Tensor4& biased) {
  switch (layer.activation.kind) {
    case ActivationKind::WtaBinary: return wta_select(biased, 1);
    case ActivationKind::KWta: return wta_select(biased, layer.activation.k);
    case ActivationKind::Triangle: return triangle_activation(biased);
  }
  throw std::logic_error("unknown activation kind");
}

Tensor4 layer_forward(const ConvLayer& layer, const Tensor4& input) {
  const LayerSignals s = layer_signals(layer, input);
  return avg_pool2(layer_activation(layer, s.biased));
}

Tensor4 layer_forward_train(ConvLayer& layer, const Tensor4& input, const StepParams& params) {
  const bool same = (layer.activation.kind == ActivationKind::WtaBinary && layer.plasticity_k == 1) ||
                    (layer.activation.kind == ActivationKind::KWta && layer.activation.k == layer.plasticity_k);
  const int n = input.batch();
  const int filters = layer.filters();
  const std::size_t per_item = static_cast<std::size_t>(filters) *
                               std::max(1, input.height() - layer.weights.kernel_h() + 1) *
                               std::max(1, input.width() - layer.weights.kernel_w() + 1);
  // Work through the batch a few images at a time so the per-position
  // intermediates stay small; every quantity below is a sum over images.
  const int chunk = std::max(1, static_cast<int>((std::size_t{1} << 20) / per_item));

  Tensor4 pooled;
  std::size_t columns = 0;
  HebbianAccumulator acc(layer.weights);
  std::vector<double> wins(filters, 0.0);
  for (int start = 0; start < n; start += chunk) {
    const int count = std::min(chunk, n - start);
    LayerSignals s = layer_signals(layer, count == n ? input : slice_batch(input, start, count));
    Tensor4 winners = wta_select(s.biased, layer.plasticity_k);
    const Tensor4 p = avg_pool2(same ? winners : layer_activation(layer, s.biased));
    if (start == 0) pooled = Tensor4(Shape4{n, filters, p.height(), p.width()});
    std::copy(p.data().begin(), p.data().end(), pooled.item(start).begin());
    columns += static_cast<std::size_t>(count) * winners.shape().plane();
    count_wins(winners, wins);
    if (params.learning_rate != 0.0) {
      acc.add(params.rule, PlasticityBatch{std::move(s.x), std::move(s.preact), std::move(winners)}, layer.weights);
    }
  }

  if (params.learning_rate != 0.0) {
    const WeightTensor delta = acc.delta(layer.weights);
    auto w = layer.weights.data();
    const auto d = delta.data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] = static_cast<float>(w[k] + params.learning_rate * static_cast<double>(d[k]));
    }
    apply_mask_and_normalize(layer, params.rescue_seed);
  }
  for (double& v : wins) v /= static_cast<double>(columns);
  update_thresholds(layer, wins, params.ema_alpha, params.threshold_rate);
  return pooled;
}

Network::Network(NetworkConfig config, std::vector<ConvLayer> layers, int epochs_completed)
    : config_(std::move(config)), layers_(std::move(layers)), epochs_completed_(epochs_completed) {
  if (layers_.size() != config_.layers.size()) {
    throw CompatibilityError("network has " + std::to_string(layers_.size()) + " layers, config describes " +
                             std::to_string(config_.layers.size()));
  }
  int in_channels = config_.input_channels;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& spec = config_.layers[l];
    const Shape4 expected{spec.filters, in_channels, spec.kernel, spec.kernel};
    const ConvLayer& layer = layers_[l];
    if (layer.weights.shape() != expected || layer.mask.shape() != expected ||
        layer.bias.size() != static_cast<std::size_t>(spec.filters) ||
        layer.rate_ema.size() != static_cast<std::size_t>(spec.filters)) {
      throw CompatibilityError("layer " + std::to_string(l + 1) + " weights " + layer.weights.shape().str() +
                               " do not match config " + expected.str());
    }
    in_channels = spec.filters;
  }
}

Network Network::create(const NetworkConfig& config) {
  config.validate();
  std::vector<ConvLayer> layers;
  int in_channels = config.input_channels;
  for (std::size_t l = 0; l < config.layers.size(); ++l) {
    layers.push_back(ConvLayer::create(config.layers[l], in_channels, derive_seed(config.seed, l)));
    in_channels = config.layers[l].filters;
  }
  return Network(config, std::move(layers), 0);
}

std::vector<Tensor4> Network::forward(const Tensor4& images) const {
  std::vector<Tensor4> outputs;
  outputs.reserve(layers_.size());
  const Tensor4* x = &images;
  for (const ConvLayer& layer : layers_) {
    outputs.push_back(layer_forward(layer, *x));
    x = &outputs.back();
  }
  return outputs;
}

void Network::train_epoch(const Tensor4& images, const StepObserver& observer, int active_layer) {
  const int n = images.batch();
  if (n < 1) throw DataError("train: empty dataset");
  const int epoch = epochs_completed_;
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng(derive_seed(config_.seed, 0x1000 + static_cast<std::uint64_t>(epoch))).shuffle(order);

  const int batches = (n + config_.batch_size - 1) / config_.batch_size;
  StepParams params;
  params.rule = config_.rule;
  params.learning_rate = config_.learning_rate;
  params.threshold_rate = config_.threshold_rate;
  params.ema_alpha = std::min(1.0, 1.0 / (config_.ema_horizon * batches));

  const int last = active_layer >= 0 ? active_layer : static_cast<int>(layers_.size()) - 1;
  for (int bi = 0; bi < batches; ++bi) {
    const int start = bi * config_.batch_size;
    const int count = std::min(config_.batch_size, n - start);
    Tensor4 x = gather_batch(images, std::span<const int>(order).subspan(start, count));
    for (int l = 0; l <= last; ++l) {
      ConvLayer& layer = layers_[l];
      if (active_layer >= 0 && l < active_layer) {
        x = layer_forward(layer, x);
        continue;
      }
      params.rescue_seed = derive_seed(config_.seed, (static_cast<std::uint64_t>(epoch) << 40) |
                                                         (static_cast<std::uint64_t>(bi) << 8) | l);
      x = layer_forward_train(layer, x, params);
      if (observer) observer(*this, StepInfo{epoch, bi, l});
    }
  }
  ++epochs_completed_;
}

void Network::train(const Tensor4& images, const StepObserver& observer) {
  const int per_layer = config_.epochs;
  const int total = config_.greedy ? per_layer * static_cast<int>(layers_.size()) : per_layer;
  while (epochs_completed_ < total) {
    const int active = config_.greedy ? epochs_completed_ / per_layer : -1;
    train_epoch(images, observer, active);
  }
}

std::vector<Shape4> output_shapes(const NetworkConfig& config, int batch) {
  std::vector<Shape4> shapes;
  int size = config.input_size;
  for (const LayerSpec& s : config.layers) {
    size = (size - s.kernel + 1) / 2;
    shapes.push_back(Shape4{batch, s.filters, size, size});
  }
  return shapes;
}

Network network_train(const NetworkConfig& config, const Tensor4& images, const Network::StepObserver& observer) {
  Network net = Network::create(config);
  net.train(images, observer);
  return net;
}

std::vector<Tensor4> network_forward(const Network& network, const Tensor4& images) {
  return network.forward(images);
}

Tensor4 slice_batch(const Tensor4& t, int start, int count) {
  if (start < 0 || count < 1 || start + count > t.batch()) {
    throw ShapeError("slice_batch: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                     ") outside batch of " + std::to_string(t.batch()));
  }
  Shape4 s = t.shape();
  s.n = count;
  const auto src = t.data().subspan(start * s.per_item(), count * s.per_item());
  return Tensor4(s, std::vector<float>(src.begin(), src.end()));
}

Tensor4 gather_batch(const Tensor4& t, std::span<const int> rows) {
  Shape4 s = t.shape();
  s.n = static_cast<int>(rows.size());
  Tensor4 out(s);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = t.item(rows[r]);
    std::copy(src.begin(), src.end(), out.item(static_cast<int>(r)).begin());
  }
  return out;
}

}  // namespace hebb
