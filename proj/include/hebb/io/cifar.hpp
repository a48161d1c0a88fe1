#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hebb/tensor.hpp"

namespace hebb::io {

inline constexpr int kCifarSide = 32;
inline constexpr int kCifarChannels = 3;
inline constexpr std::size_t kCifarPixels = kCifarChannels * kCifarSide * kCifarSide;
inline constexpr std::size_t kCifarRecord = 1 + kCifarPixels;

// Raw CIFAR-10 records: per image 1024 R, 1024 G, 1024 B bytes, row-major.
struct Cifar10Set {
  std::vector<std::uint8_t> images;  // size() * kCifarPixels
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  void append(const Cifar10Set& other);
  // First `n` records (all if n >= size()).
  Cifar10Set head(std::size_t n) const;

  // N x 3 x 32 x 32 floats scaled to [0, 1].
  Tensor4 to_tensor() const;
  std::vector<int> label_vector() const;
};

// Parses one binary batch file. Throws FormatError on a length that is not a
// multiple of 3073 bytes, or on a label >= 10.
Cifar10Set load_cifar10(const std::filesystem::path& file);

// data_batch_1.bin ... data_batch_5.bin (those present, at least one) and
// test_batch.bin from a cifar-10-batches-bin directory.
Cifar10Set load_cifar10_train(const std::filesystem::path& dir);
Cifar10Set load_cifar10_test(const std::filesystem::path& dir);

void save_cifar10(const Cifar10Set& set, const std::filesystem::path& file);

}  // namespace hebb::io
