#pragma once

#include <filesystem>

#include "hebb/io/image.hpp"
#include "hebb/layers.hpp"

namespace hebb::io {

// Pixel-space receptive fields of every filter in layer `layer_index`
// (1-based), shape (filters, input_channels, S, S).
//
// Layer 1 is its weights. Higher layers sum the previous layer's fields,
// weighted by w[o,c,u,v] and shifted by (u, v) times the pixel stride of the
// pooled previous output. Pooling blur is ignored, so upper-layer fields are
// approximate. Sizes for the standard network: 5, 10, 20.
Tensor4 receptive_fields(const Network& network, int layer_index);

// Side length of the receptive-field tile for a layer (1-based).
int receptive_field_size(const NetworkConfig& config, int layer_index);

// Tiles on a near-square grid with 1-px black borders. Values are mapped to
// [0,1] with one shared scale: 0 -> mid-gray, max |value| -> 0 or 1.
// Each tile pixel is drawn as a `zoom` x `zoom` block.
RgbImage render_rf_grid(const Tensor4& fields, int zoom = 1);

void export_receptive_fields(const Network& network, int layer_index, const std::filesystem::path& path,
                             int zoom = 1);

}  // namespace hebb::io
