#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "hebb/layers.hpp"
#include "hebb/whitening.hpp"

namespace hebb::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary container, little-endian throughout:
//
//   "HEBB"  u32 version
//   u32 config_bytes, config text (format_config)
//   u32 epochs_completed
//   u32 layer_count, then per layer:
//     u32 out, in, kh, kw
//     f32 weights[out*in*kh*kw]  f32 bias[out]  f32 mask[out*in*kh*kw]  f32 rate_ema[out]
//   u32 has_zca, then if 1:
//     u32 dim  f64 epsilon  u64 fitted_on  f32 matrix[dim*dim] (row-major)
//
// A whitening-only file has layer_count 0.
struct Checkpoint {
  NetworkConfig config;
  std::vector<ConvLayer> layers;
  int epochs_completed = 0;
  std::optional<ZcaTransform> zca;

  // Throws CompatibilityError when the layers disagree with the config.
  Network network() const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Network& network, const std::optional<ZcaTransform>& zca,
                     const std::filesystem::path& path);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hebb::io
