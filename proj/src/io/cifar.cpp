#include "hebb/io/cifar.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include "hebb/errors.hpp"

namespace hebb::io {

void Cifar10Set::append(const Cifar10Set& other) {
  images.insert(images.end(), other.images.begin(), other.images.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

Cifar10Set Cifar10Set::head(std::size_t n) const {
  n = std::min(n, size());
  Cifar10Set out;
  out.images.assign(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n * kCifarPixels));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

Tensor4 Cifar10Set::to_tensor() const {
  if (size() == 0) throw DataError("cifar: empty set");
  std::vector<float> values(images.size());
  for (std::size_t k = 0; k < images.size(); ++k) values[k] = static_cast<float>(images[k]) / 255.0f;
  return Tensor4(Shape4{static_cast<int>(size()), kCifarChannels, kCifarSide, kCifarSide}, std::move(values));
}

std::vector<int> Cifar10Set::label_vector() const { return std::vector<int>(labels.begin(), labels.end()); }

Cifar10Set load_cifar10(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("cifar: cannot open " + file.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.empty() || bytes.size() % kCifarRecord != 0) {
    const std::size_t records = bytes.size() / kCifarRecord + 1;
    throw FormatError("cifar: " + file.string() + " has " + std::to_string(bytes.size()) +
                      " bytes, expected a multiple of " + std::to_string(kCifarRecord) + " (e.g. " +
                      std::to_string(records * kCifarRecord) + ")");
  }
  const std::size_t n = bytes.size() / kCifarRecord;
  Cifar10Set set;
  set.labels.reserve(n);
  set.images.reserve(n * kCifarPixels);
  for (std::size_t r = 0; r < n; ++r) {
    const auto rec = bytes.begin() + static_cast<std::ptrdiff_t>(r * kCifarRecord);
    if (*rec >= 10) {
      throw FormatError("cifar: corrupt label " + std::to_string(*rec) + " in record " + std::to_string(r) +
                        " of " + file.string());
    }
    set.labels.push_back(*rec);
    set.images.insert(set.images.end(), rec + 1, rec + static_cast<std::ptrdiff_t>(kCifarRecord));
  }
  return set;
}

Cifar10Set load_cifar10_train(const std::filesystem::path& dir) {
  Cifar10Set set;
  for (int i = 1; i <= 5; ++i) {
    const auto file = dir / ("data_batch_" + std::to_string(i) + ".bin");
    if (std::filesystem::exists(file)) set.append(load_cifar10(file));
  }
  if (set.size() == 0) throw FormatError("cifar: no data_batch_*.bin files in " + dir.string());
  return set;
}

Cifar10Set load_cifar10_test(const std::filesystem::path& dir) { return load_cifar10(dir / "test_batch.bin"); }

void save_cifar10(const Cifar10Set& set, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw FormatError("cifar: cannot write " + file.string());
  for (std::size_t r = 0; r < set.size(); ++r) {
    out.put(static_cast<char>(set.labels[r]));
    out.write(reinterpret_cast<const char*>(set.images.data() + r * kCifarPixels),
              static_cast<std::streamsize>(kCifarPixels));
  }
  if (!out) throw FormatError("cifar: write failed for " + file.string());
}

}  // namespace hebb::io
