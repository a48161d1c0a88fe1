#include "hebb/io/rf_export.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hebb/errors.hpp"

namespace hebb::io {

namespace {

void check_layer(const NetworkConfig& config, int layer_index) {
  if (layer_index < 1 || layer_index > static_cast<int>(config.layers.size())) {
    throw std::out_of_range("layer index " + std::to_string(layer_index) + " outside [1, " +
                            std::to_string(config.layers.size()) + "]");
  }
}

// Pixel stride between adjacent conv outputs of a layer (before its pooling).
int output_stride(int layer_index) { return 1 << (layer_index - 1); }

}  // namespace

int receptive_field_size(const NetworkConfig& config, int layer_index) {
  check_layer(config, layer_index);
  int size = config.layers[0].kernel;
  for (int l = 2; l <= layer_index; ++l) {
    // Pooling the previous output widens it by one previous stride; the
    // kernel then spans (k-1) pooled strides.
    size += output_stride(l - 1) + output_stride(l) * (config.layers[l - 1].kernel - 1);
  }
  return size;
}

Tensor4 receptive_fields(const Network& network, int layer_index) {
  const NetworkConfig& config = network.config();
  check_layer(config, layer_index);
  Tensor4 fields = network.layers()[0].weights;
  for (int l = 2; l <= layer_index; ++l) {
    const WeightTensor& w = network.layers()[l - 1].weights;
    const int size = receptive_field_size(config, l);
    const int prev = fields.height();
    const int step = output_stride(l);
    Tensor4 next(Shape4{w.out_channels(), fields.channels(), size, size}, 0.0f);
    for (int o = 0; o < w.out_channels(); ++o) {
      for (int c = 0; c < w.in_channels(); ++c) {
        for (int u = 0; u < w.kernel_h(); ++u) {
          for (int v = 0; v < w.kernel_w(); ++v) {
            const float weight = w(o, c, u, v);
            if (weight == 0.0f) continue;
            for (int ch = 0; ch < fields.channels(); ++ch) {
              for (int i = 0; i < prev; ++i) {
                for (int j = 0; j < prev; ++j) {
                  next(o, ch, u * step + i, v * step + j) += weight * fields(c, ch, i, j);
                }
              }
            }
          }
        }
      }
    }
    fields = std::move(next);
  }
  return fields;
}

RgbImage render_rf_grid(const Tensor4& fields, int zoom) {
  if (zoom < 1) throw std::invalid_argument("zoom must be >= 1");
  const int n = fields.batch();
  const int side = fields.height();
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  const int tile = side * zoom;
  RgbImage img(cols * (tile + 1) + 1, rows * (tile + 1) + 1, 0);

  double scale = 0.0;
  for (float v : fields.data()) scale = std::max(scale, std::abs(static_cast<double>(v)));
  auto to_byte = [scale](double v) {
    const double unit = scale > 0.0 ? 0.5 + 0.5 * v / scale : 0.5;
    return static_cast<std::uint8_t>(std::lround(std::clamp(unit, 0.0, 1.0) * 255.0));
  };

  for (int f = 0; f < n; ++f) {
    const int x0 = (f % cols) * (tile + 1) + 1;
    const int y0 = (f / cols) * (tile + 1) + 1;
    for (int i = 0; i < tile; ++i) {
      for (int j = 0; j < tile; ++j) {
        std::uint8_t* px = img.at(x0 + j, y0 + i);
        for (int ch = 0; ch < 3; ++ch) {
          // Grayscale inputs replicate their single channel.
          const int src = std::min(ch, fields.channels() - 1);
          px[ch] = to_byte(fields(f, src, i / zoom, j / zoom));
        }
      }
    }
  }
  return img;
}

void export_receptive_fields(const Network& network, int layer_index, const std::filesystem::path& path,
                             int zoom) {
  write_image(render_rf_grid(receptive_fields(network, layer_index), zoom), path);
}

}  // namespace hebb::io
