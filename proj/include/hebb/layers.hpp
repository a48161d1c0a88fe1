#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hebb/hebbian.hpp"
#include "hebb/tensor.hpp"

namespace hebb {

enum class ActivationKind { WtaBinary, KWta, Triangle };

// How a layer computes the activity it transmits to the next layer.
// Plasticity always uses binary k-WTA, independently of this.
struct ActivationMode {
  ActivationKind kind = ActivationKind::WtaBinary;
  int k = 1;  // winners per column for KWta

  static ActivationMode wta() { return {ActivationKind::WtaBinary, 1}; }
  static ActivationMode kwta(int k) { return {ActivationKind::KWta, k}; }
  static ActivationMode triangle() { return {ActivationKind::Triangle, 1}; }
  bool operator==(const ActivationMode&) const = default;
};

// "wta", "kwta:<k>", "triangle"
std::string to_string(ActivationMode mode);
std::optional<ActivationMode> parse_activation(std::string_view text);

struct LayerSpec {
  int filters = 0;
  int kernel = 0;
  ActivationMode activation;
  int plasticity_k = 1;
  double prune_density = 1.0;
  bool operator==(const LayerSpec&) const = default;
};

struct NetworkConfig {
  std::vector<LayerSpec> layers;
  int input_channels = 3;
  int input_size = 32;
  int epochs = 20;
  int batch_size = 128;
  double learning_rate = 0.01;
  double threshold_rate = 0.02;
  // Firing-rate EMA time constant, in epochs. alpha = 1 / (horizon * batches per epoch).
  double ema_horizon = 0.1;
  HebbRule rule = HebbRule::Instar;
  std::uint64_t seed = 0;
  // Train one layer at a time (earlier layers frozen) instead of all at once.
  bool greedy = false;
  double zca_epsilon = 1e-3;
  // Decoder ridge = ridge_scale * trace(X^T X) / F.
  double ridge_scale = 1e-3;

  // "default": WTA everywhere, dense. "triangle-pruned": layers 2+ use the
  // triangle activation and keep 1% of connections.
  static NetworkConfig preset(std::string_view name);
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// One Hebbian convolutional layer and its homeostasis state.
struct ConvLayer {
  WeightTensor weights;
  WeightTensor mask;
  std::vector<float> bias;      // adaptive threshold, added to the pre-activation
  std::vector<float> rate_ema;  // estimated win rate per filter
  ActivationMode activation;
  int plasticity_k = 1;

  // N(0,1) weights, masked, unit norm; bias 0; rate_ema at the target rate.
  static ConvLayer create(const LayerSpec& spec, int in_channels, std::uint64_t seed);

  int filters() const { return weights.out_channels(); }
  double target_rate() const { return static_cast<double>(plasticity_k) / filters(); }
  bool operator==(const ConvLayer&) const = default;
};

struct StepParams {
  HebbRule rule = HebbRule::Instar;
  double learning_rate = 0.01;
  double threshold_rate = 0.02;
  double ema_alpha = 0.1;
  std::uint64_t rescue_seed = 0;
};

// Binary map with exactly k ones per (b,i,j) column: the k largest channels,
// ties going to the lowest channel index.
Tensor4 wta_select(const Tensor4& activation, int k);

// max(0, a - mean over channels) at every position.
Tensor4 triangle_activation(const Tensor4& activation);

// EMA of observed win fractions, then bias += rate * (target - ema).
void update_thresholds(ConvLayer& layer, const Tensor4& plasticity_output, double ema_alpha, double threshold_rate);
// Same, from per-filter win fractions already averaged over the batch.
void update_thresholds(ConvLayer& layer, std::span<const double> win_fraction, double ema_alpha,
                       double threshold_rate);

// weights *= mask, then each filter rescaled to unit norm. A filter whose
// surviving weights are all zero is re-drawn from N(0,1) on its mask.
void apply_mask_and_normalize(ConvLayer& layer, std::uint64_t rescue_seed = 0);

// Standardized input, convolution, and bias-shifted pre-activation.
struct LayerSignals {
  Tensor4 x;
  Tensor4 preact;
  Tensor4 biased;
};
LayerSignals layer_signals(const ConvLayer& layer, const Tensor4& input);

// Transmitted (pre-pooling) activity for a biased pre-activation.
Tensor4 layer_activation(const ConvLayer& layer, const Tensor4& biased);

// Inference: pooled activation, no state change.
Tensor4 layer_forward(const ConvLayer& layer, const Tensor4& input);

// One training step on a batch; returns the pooled activation computed with
// the weights as they were before the update.
Tensor4 layer_forward_train(ConvLayer& layer, const Tensor4& input, const StepParams& params);

struct StepInfo {
  int epoch = 0;
  int batch = 0;
  int layer = 0;
};

class Network {
 public:
  using StepObserver = std::function<void(const Network&, const StepInfo&)>;

  Network() = default;
  Network(NetworkConfig config, std::vector<ConvLayer> layers, int epochs_completed = 0);

  static Network create(const NetworkConfig& config);

  const NetworkConfig& config() const { return config_; }
  const std::vector<ConvLayer>& layers() const { return layers_; }
  std::vector<ConvLayer>& layers() { return layers_; }
  int epochs_completed() const { return epochs_completed_; }

  // Pooled output of every layer.
  std::vector<Tensor4> forward(const Tensor4& images) const;

  // One pass over `images` in a seed-and-epoch-determined order. In greedy
  // mode only `active_layer` learns; otherwise all layers learn.
  void train_epoch(const Tensor4& images, const StepObserver& observer = {}, int active_layer = -1);

  // Trains until epochs_completed() reaches config().epochs.
  void train(const Tensor4& images, const StepObserver& observer = {});

  bool operator==(const Network&) const = default;

 private:
  NetworkConfig config_;
  std::vector<ConvLayer> layers_;
  int epochs_completed_ = 0;
};

// Shapes of each layer's pooled output for a given config.
std::vector<Shape4> output_shapes(const NetworkConfig& config, int batch = 1);

Network network_train(const NetworkConfig& config, const Tensor4& images,
                      const Network::StepObserver& observer = {});
std::vector<Tensor4> network_forward(const Network& network, const Tensor4& images);

// Rows [start, start + count) of a batch tensor.
Tensor4 slice_batch(const Tensor4& t, int start, int count);
Tensor4 gather_batch(const Tensor4& t, std::span<const int> rows);

}  // namespace hebb
