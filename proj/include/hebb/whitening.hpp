#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hebb/tensor.hpp"

namespace hebb {

// ZCA whitening matrix E (D + eps)^{-1/2} E^T, stored row-major in single
// precision. Immutable once fitted.
class ZcaTransform {
 public:
  ZcaTransform() = default;
  ZcaTransform(int dim, double epsilon, std::size_t fitted_on, std::vector<float> matrix);

  int dim() const { return dim_; }
  double epsilon() const { return epsilon_; }
  std::size_t fitted_on() const { return fitted_on_; }
  std::span<const float> matrix() const { return matrix_; }
  float at(int r, int c) const { return matrix_[static_cast<std::size_t>(r) * dim_ + c]; }
  bool empty() const { return dim_ == 0; }

  static ZcaTransform identity(int dim);

  // Largest |M - M^T| entry.
  double asymmetry() const;

  bool operator==(const ZcaTransform&) const = default;

 private:
  int dim_ = 0;
  double epsilon_ = 0.0;
  std::size_t fitted_on_ = 0;
  std::vector<float> matrix_;
};

// Fits directly on the rows of `samples` (N x D) using their mean-centered
// covariance (1/N). No per-sample preprocessing.
ZcaTransform fit_zca_vectors(const Eigen::MatrixXd& samples, double epsilon);

// Fits on images: each image is flattened and standardized, then the
// covariance is accumulated over the set in fixed order.
ZcaTransform fit_zca(const Tensor4& images, double epsilon);

// M * v for a single flat vector (no standardization).
std::vector<double> apply_zca_vector(const ZcaTransform& t, std::span<const double> v);

// Standardizes every image, multiplies by the whitening matrix, reshapes back.
Tensor4 apply_zca(const ZcaTransform& t, const Tensor4& images);

}  // namespace hebb
