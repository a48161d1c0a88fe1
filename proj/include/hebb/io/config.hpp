#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hebb/layers.hpp"

namespace hebb::io {

// Flat `key = value` text, one key per line, '#' starts a comment.
//
//   rule              hebb | instar | oja
//   epochs            passes over the training set (per layer when greedy)
//   batch_size        images per step
//   learning_rate     eta applied to the summed update
//   threshold_rate    bias step toward the target win rate
//   ema_horizon       win-rate EMA time constant, in epochs
//   seed              u64; drives init, masks and batch order
//   greedy            true | false
//   zca_epsilon       eigenvalue regularizer for whitening
//   ridge_scale       decoder ridge relative to trace(X^T X) / F
//   input_channels, input_size
//   layers            number of layers; resizes the layer list
//   layerN.filters, layerN.kernel, layerN.activation (wta | kwta:K | triangle),
//   layerN.plasticity_k, layerN.prune_density      (N counts from 1)
//
// Keys not listed are errors. Keys absent from the text keep the values of
// `base`.
NetworkConfig parse_config(std::string_view text, const NetworkConfig& base);
NetworkConfig load_config(const std::filesystem::path& file, const NetworkConfig& base);

// Every key, in a form parse_config reads back to an identical config.
std::string format_config(const NetworkConfig& config);

}  // namespace hebb::io
