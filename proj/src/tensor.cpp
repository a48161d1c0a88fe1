#include "hebb/tensor.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hebb/errors.hpp"

namespace hebb {

namespace {

constexpr double kDegenerateStd = 1e-8;

void require_positive(const Shape4& s) {
  if (s.n <= 0 || s.c <= 0 || s.h <= 0 || s.w <= 0) {
    throw ShapeError("tensor dims must be positive, got " + s.str());
  }
}

}  // namespace

std::string Shape4::str() const {
  std::ostringstream os;
  os << '(' << n << ", " << c << ", " << h << ", " << w << ')';
  return os.str();
}

Tensor4::Tensor4(Shape4 shape, float fill) : shape_(shape) {
  require_positive(shape_);
  data_.assign(shape_.count(), fill);
}

Tensor4::Tensor4(Shape4 shape, std::vector<float> values) : shape_(shape), data_(std::move(values)) {
  require_positive(shape_);
  if (data_.size() != shape_.count()) {
    throw ShapeError("tensor of shape " + shape_.str() + " needs " + std::to_string(shape_.count()) +
                     " values, got " + std::to_string(data_.size()));
  }
}

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

double WeightTensor::filter_norm(int o) const {
  double sq = 0.0;
  for (float v : filter(o)) sq += static_cast<double>(v) * v;
  return std::sqrt(sq);
}

Tensor4 conv2d_valid(const Tensor4& input, const WeightTensor& weights) {
  const Shape4& in = input.shape();
  const int kh = weights.kernel_h();
  const int kw = weights.kernel_w();
  if (in.c != weights.in_channels()) {
    throw ShapeError("conv2d_valid: input has " + std::to_string(in.c) + " channels, weights expect " +
                     std::to_string(weights.in_channels()));
  }
  if (in.h < kh || in.w < kw) {
    throw ShapeError("conv2d_valid: input " + std::to_string(in.h) + "x" + std::to_string(in.w) +
                     " smaller than kernel " + std::to_string(kh) + "x" + std::to_string(kw));
  }
  const int oh = in.h - kh + 1;
  const int ow = in.w - kw + 1;
  const int positions = oh * ow;
  const int fan_in = static_cast<int>(weights.fan_in());
  const int cout = weights.out_channels();

  // im2col over a chunk of images at once so that small late-layer maps still
  // give the GEMM enough columns: patches is fan_in x (count * positions).
  const int chunk = std::max(1, std::min(in.n, 4096 / positions));
  std::vector<float> patches(static_cast<std::size_t>(fan_in) * chunk * positions);
  std::vector<float> result(static_cast<std::size_t>(cout) * chunk * positions);
  Tensor4 out(Shape4{in.n, cout, oh, ow});
  for (int b0 = 0; b0 < in.n; b0 += chunk) {
    const int count = std::min(chunk, in.n - b0);
    const int cols = count * positions;
    int row = 0;
    for (int c = 0; c < in.c; ++c) {
      for (int u = 0; u < kh; ++u) {
        for (int v = 0; v < kw; ++v, ++row) {
          float* dst = patches.data() + static_cast<std::size_t>(row) * cols;
          for (int b = 0; b < count; ++b) {
            for (int i = 0; i < oh; ++i) {
              const float* src = input.data().data() + input.index(b0 + b, c, i + u, v);
              std::copy(src, src + ow, dst + (b * oh + i) * ow);
            }
          }
        }
      }
    }
    cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, cout, cols, fan_in, 1.0f, weights.data().data(), fan_in,
                patches.data(), cols, 0.0f, result.data(), cols);
    for (int b = 0; b < count; ++b) {
      float* dst = out.item(b0 + b).data();
      for (int o = 0; o < cout; ++o) {
        const float* src = result.data() + static_cast<std::size_t>(o) * cols + b * positions;
        std::copy(src, src + positions, dst + static_cast<std::size_t>(o) * positions);
      }
    }
  }
  return out;
}

Tensor4 unfold(const Tensor4& input, int kh, int kw) {
  const Shape4& in = input.shape();
  if (kh <= 0 || kw <= 0 || in.h < kh || in.w < kw) {
    throw ShapeError("unfold: kernel " + std::to_string(kh) + "x" + std::to_string(kw) +
                     " does not fit input " + in.str());
  }
  const int oh = in.h - kh + 1;
  const int ow = in.w - kw + 1;
  Tensor4 out(Shape4{in.n, in.c * kh * kw, oh, ow});
  for (int b = 0; b < in.n; ++b) {
    for (int c = 0; c < in.c; ++c) {
      for (int u = 0; u < kh; ++u) {
        for (int v = 0; v < kw; ++v) {
          const int channel = (c * kh + u) * kw + v;
          for (int i = 0; i < oh; ++i) {
            for (int j = 0; j < ow; ++j) out(b, channel, i, j) = input(b, c, i + u, j + v);
          }
        }
      }
    }
  }
  return out;
}

Tensor4 avg_pool2(const Tensor4& input) {
  const Shape4& in = input.shape();
  if (in.h % 2 != 0 || in.w % 2 != 0) {
    throw ShapeError("avg_pool2: spatial dims must be even, got " + in.str());
  }
  Tensor4 out(Shape4{in.n, in.c, in.h / 2, in.w / 2});
  for (int b = 0; b < in.n; ++b) {
    for (int c = 0; c < in.c; ++c) {
      for (int i = 0; i < in.h / 2; ++i) {
        for (int j = 0; j < in.w / 2; ++j) {
          const double sum = static_cast<double>(input(b, c, 2 * i, 2 * j)) + input(b, c, 2 * i, 2 * j + 1) +
                             input(b, c, 2 * i + 1, 2 * j) + input(b, c, 2 * i + 1, 2 * j + 1);
          out(b, c, i, j) = static_cast<float>(sum * 0.25);
        }
      }
    }
  }
  return out;
}

void standardize_values(std::span<float> values) {
  if (values.empty()) return;
  double mean = 0.0;
  for (float v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (float v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(values.size()));
  if (!(sd >= kDegenerateStd)) {
    std::fill(values.begin(), values.end(), 0.0f);
    return;
  }
  for (float& v : values) v = static_cast<float>((v - mean) / sd);
}

Tensor4 standardize_sample(const Tensor4& input) {
  Tensor4 out = input;
  for (int b = 0; b < out.batch(); ++b) standardize_values(out.item(b));
  return out;
}

}  // namespace hebb
