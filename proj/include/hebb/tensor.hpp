#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hebb {

// Batch x channels x height x width. For weights the same four slots hold
// out-channels x in-channels x kernel-height x kernel-width.
struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t per_item() const { return static_cast<std::size_t>(c) * h * w; }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

// Dense row-major 4-d array of 32-bit floats. Arithmetic on it accumulates in
// double; storage stays single precision so checkpoints round-trip exactly.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, float fill = 0.0f);
  Tensor4(Shape4 shape, std::vector<float> values);

  const Shape4& shape() const { return shape_; }
  int batch() const { return shape_.n; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::vector<float>& storage() { return data_; }

  // All C*H*W values of batch element b.
  std::span<float> item(int b) {
    return std::span<float>(data_).subspan(b * shape_.per_item(), shape_.per_item());
  }
  std::span<const float> item(int b) const {
    return std::span<const float>(data_).subspan(b * shape_.per_item(), shape_.per_item());
  }

  std::size_t index(int b, int c, int i, int j) const {
    return ((static_cast<std::size_t>(b) * shape_.c + c) * shape_.h + i) * shape_.w + j;
  }
  float& operator()(int b, int c, int i, int j) { return data_[index(b, c, i, j)]; }
  float operator()(int b, int c, int i, int j) const { return data_[index(b, c, i, j)]; }

  bool all_finite() const;
  bool operator==(const Tensor4&) const = default;

 private:
  Shape4 shape_;
  std::vector<float> data_;
};

// Convolution filters, one per output channel.
class WeightTensor : public Tensor4 {
 public:
  using Tensor4::Tensor4;
  explicit WeightTensor(Tensor4 t) : Tensor4(std::move(t)) {}

  int out_channels() const { return shape().n; }
  int in_channels() const { return shape().c; }
  int kernel_h() const { return shape().h; }
  int kernel_w() const { return shape().w; }
  std::size_t fan_in() const { return shape().per_item(); }

  std::span<float> filter(int o) { return item(o); }
  std::span<const float> filter(int o) const { return item(o); }

  // Euclidean norm of filter o, accumulated in double.
  double filter_norm(int o) const;
};

// output[b,o,i,j] = sum_{c,u,v} input[b,c,i+u,j+v] * w[o,c,u,v]; valid, stride 1.
Tensor4 conv2d_valid(const Tensor4& input, const WeightTensor& weights);

// Rearranges each kh x kw patch into a column: output channel c*kh*kw + u*kw + v
// at (i,j) holds input[b,c,i+u,j+v].
Tensor4 unfold(const Tensor4& input, int kh, int kw);

// 2x2 mean pooling with stride 2.
Tensor4 avg_pool2(const Tensor4& input);

// Per batch element: subtract the mean and divide by the (population) standard
// deviation over all C*H*W values. Near-constant elements become zeros.
Tensor4 standardize_sample(const Tensor4& input);

// Standardizes a single flat vector in place with the same convention.
void standardize_values(std::span<float> values);

}  // namespace hebb
