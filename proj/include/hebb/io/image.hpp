#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hebb::io {

// 8-bit interleaved RGB raster.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0) : width(w), height(h), pixels(std::size_t(w) * h * 3, fill) {}
  std::uint8_t* at(int x, int y) { return &pixels[(std::size_t(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const { return &pixels[(std::size_t(y) * width + x) * 3]; }
};

std::vector<std::uint8_t> encode_png(const RgbImage& image);
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);

// Format chosen by extension: ".ppm" writes binary PPM, anything else PNG.
void write_image(const RgbImage& image, const std::filesystem::path& path);

}  // namespace hebb::io
