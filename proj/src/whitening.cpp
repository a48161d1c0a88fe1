#include "hebb/whitening.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "hebb/errors.hpp"

namespace hebb {

namespace {

constexpr int kChunk = 256;

ZcaTransform from_covariance(const Eigen::MatrixXd& cov, double epsilon, std::size_t n) {
  if (!cov.allFinite()) throw DataError("fit_zca: covariance contains non-finite values");
  // Divide-and-conquer symmetric eigensolver; e is overwritten with the eigenvectors.
  const int d = static_cast<int>(cov.rows());
  Eigen::MatrixXd e = cov;
  Eigen::VectorXd values(d);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', d, e.data(), d, values.data());
  if (info != 0) throw DataError("fit_zca: eigendecomposition failed (info " + std::to_string(info) + ")");

  // Rank-deficient directions (e.g. the constant direction after per-image
  // standardization) get a zero gain instead of an unbounded one.
  Eigen::VectorXd gain(cov.rows());
  for (Eigen::Index i = 0; i < gain.size(); ++i) {
    const double lambda = std::max(values(i), 0.0) + epsilon;
    gain(i) = lambda > 1e-12 ? 1.0 / std::sqrt(lambda) : 0.0;
  }
  Eigen::MatrixXd m = e * gain.asDiagonal() * e.transpose();
  m = 0.5 * (m + m.transpose());

  std::vector<float> entries(static_cast<std::size_t>(d) * d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) entries[static_cast<std::size_t>(r) * d + c] = static_cast<float>(m(r, c));
  }
  return ZcaTransform(d, epsilon, n, std::move(entries));
}

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DataError("fit_zca: epsilon must be finite and non-negative");
  }
}

}  // namespace

ZcaTransform::ZcaTransform(int dim, double epsilon, std::size_t fitted_on, std::vector<float> matrix)
    : dim_(dim), epsilon_(epsilon), fitted_on_(fitted_on), matrix_(std::move(matrix)) {
  if (dim_ <= 0 || matrix_.size() != static_cast<std::size_t>(dim_) * dim_) {
    throw ShapeError("ZcaTransform: matrix size does not match dim " + std::to_string(dim_));
  }
}

ZcaTransform ZcaTransform::identity(int dim) {
  std::vector<float> m(static_cast<std::size_t>(dim) * dim, 0.0f);
  for (int i = 0; i < dim; ++i) m[static_cast<std::size_t>(i) * dim + i] = 1.0f;
  return ZcaTransform(dim, 0.0, 0, std::move(m));
}

double ZcaTransform::asymmetry() const {
  double worst = 0.0;
  for (int r = 0; r < dim_; ++r) {
    for (int c = r + 1; c < dim_; ++c) worst = std::max(worst, std::abs(double(at(r, c)) - at(c, r)));
  }
  return worst;
}

ZcaTransform fit_zca_vectors(const Eigen::MatrixXd& samples, double epsilon) {
  check_epsilon(epsilon);
  if (samples.rows() < 2) throw DataError("fit_zca: need at least 2 samples");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(samples.rows());
  return from_covariance(cov, epsilon, static_cast<std::size_t>(samples.rows()));
}

ZcaTransform fit_zca(const Tensor4& images, double epsilon) {
  check_epsilon(epsilon);
  const int n = images.batch();
  if (n < 2) throw DataError("fit_zca: need at least 2 images, got " + std::to_string(n));
  const int d = static_cast<int>(images.shape().per_item());

  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd chunk(d, kChunk);
  std::vector<float> buf(d);
  for (int start = 0; start < n; start += kChunk) {
    const int count = std::min(kChunk, n - start);
    for (int k = 0; k < count; ++k) {
      const auto src = images.item(start + k);
      std::copy(src.begin(), src.end(), buf.begin());
      standardize_values(buf);
      for (int i = 0; i < d; ++i) chunk(i, k) = buf[i];
    }
    // Lower triangle only; mirrored below.
    cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, d, count, 1.0, chunk.data(), d, 1.0, second.data(), d);
    sum += chunk.leftCols(count).rowwise().sum();
  }
  second.triangularView<Eigen::StrictlyUpper>() = second.transpose();
  const Eigen::VectorXd mean = sum / n;
  const Eigen::MatrixXd cov = second / n - mean * mean.transpose();
  return from_covariance(cov, epsilon, static_cast<std::size_t>(n));
}

std::vector<double> apply_zca_vector(const ZcaTransform& t, std::span<const double> v) {
  if (static_cast<int>(v.size()) != t.dim()) {
    throw ShapeError("apply_zca: vector length " + std::to_string(v.size()) + " != transform dim " +
                     std::to_string(t.dim()));
  }
  std::vector<double> out(v.size(), 0.0);
  for (int r = 0; r < t.dim(); ++r) {
    double acc = 0.0;
    for (int c = 0; c < t.dim(); ++c) acc += static_cast<double>(t.at(r, c)) * v[c];
    out[r] = acc;
  }
  return out;
}

Tensor4 apply_zca(const ZcaTransform& t, const Tensor4& images) {
  const int d = static_cast<int>(images.shape().per_item());
  if (d != t.dim()) {
    throw ShapeError("apply_zca: image length " + std::to_string(d) + " != transform dim " +
                     std::to_string(t.dim()));
  }
  using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::MatrixXd m = Eigen::Map<const RowMajorF>(t.matrix().data(), d, d).cast<double>();

  Tensor4 out(images.shape());
  Eigen::MatrixXd chunk(d, kChunk);
  Eigen::MatrixXd result(d, kChunk);
  std::vector<float> buf(d);
  for (int start = 0; start < images.batch(); start += kChunk) {
    const int count = std::min(kChunk, images.batch() - start);
    for (int k = 0; k < count; ++k) {
      const auto src = images.item(start + k);
      std::copy(src.begin(), src.end(), buf.begin());
      standardize_values(buf);
      for (int i = 0; i < d; ++i) chunk(i, k) = buf[i];
    }
    cblas_dgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, d, count, d, 1.0, m.data(), d, chunk.data(), d, 0.0,
                result.data(), d);
    for (int k = 0; k < count; ++k) {
      auto dst = out.item(start + k);
      for (int i = 0; i < d; ++i) dst[i] = static_cast<float>(result(i, k));
    }
  }
  return out;
}

}  // namespace hebb
