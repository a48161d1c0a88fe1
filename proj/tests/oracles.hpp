#pragma once

// Reference implementations used only by tests. Each one is written the slow,
// obvious way and shares no code path with the library routine it checks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hebb/hebbian.hpp"
#include "hebb/random.hpp"
#include "hebb/tensor.hpp"

namespace oracle {

using hebb::Shape4;
using hebb::Tensor4;
using hebb::WeightTensor;

// Owning copy, safe to iterate when the tensor is a temporary.
inline std::vector<float> values(const Tensor4& t) { return {t.data().begin(), t.data().end()}; }

inline Tensor4 random_tensor(Shape4 s, hebb::Rng& rng, double scale = 1.0) {
  Tensor4 t(s);
  for (float& v : t.data()) v = static_cast<float>(scale * rng.normal());
  return t;
}

inline WeightTensor random_weights(Shape4 s, hebb::Rng& rng) { return WeightTensor(random_tensor(s, rng)); }

inline Tensor4 random_binary(Shape4 s, hebb::Rng& rng, double p = 0.3) {
  Tensor4 t(s);
  for (float& v : t.data()) v = rng.uniform() < p ? 1.0f : 0.0f;
  return t;
}

// Quadruple loop, long double accumulation.
inline std::vector<double> conv_loops(const Tensor4& x, const WeightTensor& w) {
  const int oh = x.height() - w.kernel_h() + 1;
  const int ow = x.width() - w.kernel_w() + 1;
  std::vector<double> out;
  for (int b = 0; b < x.batch(); ++b)
    for (int o = 0; o < w.out_channels(); ++o)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j) {
          long double acc = 0;
          for (int c = 0; c < w.in_channels(); ++c)
            for (int u = 0; u < w.kernel_h(); ++u)
              for (int v = 0; v < w.kernel_w(); ++v) acc += (long double)x(b, c, i + u, j + v) * w(o, c, u, v);
          out.push_back(static_cast<double>(acc));
        }
  return out;
}

inline double rel_diff(std::span<const float> a, std::span<const double> b) {
  double num = 0, den = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-30);
}

inline double rel_diff(std::span<const float> a, std::span<const float> b) {
  std::vector<double> bd(b.begin(), b.end());
  return rel_diff(a, std::span<const double>(bd));
}

// Per-patch Hebbian update written from the rule formulas, indexing the raw
// input (no unfold, no gradient).
inline std::vector<double> hebb_update_loops(hebb::HebbRule rule, const Tensor4& x, const Tensor4& y,
                                             const WeightTensor& w) {
  std::vector<double> d(w.size(), 0.0);
  for (int b = 0; b < y.batch(); ++b)
    for (int o = 0; o < y.channels(); ++o)
      for (int i = 0; i < y.height(); ++i)
        for (int j = 0; j < y.width(); ++j) {
          const double yy = y(b, o, i, j);
          for (int c = 0; c < w.in_channels(); ++c)
            for (int u = 0; u < w.kernel_h(); ++u)
              for (int v = 0; v < w.kernel_w(); ++v) {
                const double xv = x(b, c, i + u, j + v);
                const double wv = w(o, c, u, v);
                double term = 0;
                switch (rule) {
                  case hebb::HebbRule::PlainHebb: term = yy * xv; break;
                  case hebb::HebbRule::Instar: term = yy * (xv - wv); break;
                  case hebb::HebbRule::Oja: term = yy * (xv - yy * wv); break;
                }
                d[w.index(o, c, u, v)] += term;
              }
        }
  return d;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const int n = static_cast<int>(a.rows());
  vectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
  }
  values = a.diagonal();
}

inline Eigen::MatrixXd zca_by_jacobi(const Eigen::MatrixXd& cov, double eps) {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  jacobi_eigen(cov, values, vectors);
  Eigen::VectorXd g(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) g(i) = 1.0 / std::sqrt(std::max(values(i), 0.0) + eps);
  return vectors * g.asDiagonal() * vectors.transpose();
}

inline Eigen::MatrixXd centered_covariance(const Eigen::MatrixXd& rows) {
  const Eigen::MatrixXd c = rows.rowwise() - rows.colwise().mean();
  return c.transpose() * c / static_cast<double>(rows.rows());
}

// Leading eigenvector by power iteration.
inline Eigen::VectorXd power_iteration(const Eigen::MatrixXd& m, int iters = 2000) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows()).normalized();
  v(0) += 0.1;
  for (int i = 0; i < iters; ++i) v = (m * v).normalized();
  return v;
}

// k-WTA column by full sort (stable, so equal values keep index order).
inline std::vector<int> kwta_sorted(const std::vector<float>& column, int k) {
  std::vector<int> idx(column.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return column[a] > column[b]; });
  std::vector<int> out(column.size(), 0);
  for (int r = 0; r < k; ++r) out[idx[r]] = 1;
  return out;
}

// Ridge least squares through a QR of the stacked system [X; sqrt(ridge) P],
// independent of the normal-equation Cholesky path.
inline Eigen::MatrixXd ridge_qr(const Eigen::MatrixXd& features, const std::vector<int>& labels, double ridge,
                                int classes) {
  const Eigen::Index n = features.rows(), f = features.cols();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + f, f + 1);
  a.topLeftCorner(n, f) = features;
  a.topRightCorner(n, 1).setOnes();
  a.bottomLeftCorner(f, f) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(f, f);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n + f, classes);
  for (Eigen::Index r = 0; r < n; ++r) y(r, labels[r]) = 1;
  return a.colPivHouseholderQr().solve(y);
}

// Smooth random images: a few colored oriented gratings and blobs plus noise,
// with a class-dependent dominant orientation and tint. Values in [0,1].
inline Tensor4 synthetic_images(int n, std::uint64_t seed, std::vector<int>* labels = nullptr, int side = 32) {
  hebb::Rng rng(seed);
  Tensor4 t(Shape4{n, 3, side, side});
  if (labels) labels->assign(n, 0);
  for (int b = 0; b < n; ++b) {
    const int cls = static_cast<int>(rng.below(10));
    if (labels) (*labels)[b] = cls;
    const double angle = cls * 0.314159 + 0.3 * rng.normal();
    const double freq = 0.25 + 0.05 * (cls % 3) + 0.03 * rng.normal();
    const double phase = 6.28318 * rng.uniform();
    const double tint[3] = {0.5 + 0.3 * std::cos(cls * 0.7), 0.5 + 0.3 * std::cos(cls * 0.7 + 2.1),
                            0.5 + 0.3 * std::cos(cls * 0.7 + 4.2)};
    const double cx = side * rng.uniform(), cy = side * rng.uniform();
    const double radius = 4 + 6 * rng.uniform();
    for (int i = 0; i < side; ++i)
      for (int j = 0; j < side; ++j) {
        const double g = std::sin(freq * (std::cos(angle) * j + std::sin(angle) * i) + phase);
        const double blob = std::exp(-((i - cy) * (i - cy) + (j - cx) * (j - cx)) / (2 * radius * radius));
        for (int c = 0; c < 3; ++c) {
          const double v = 0.5 + 0.25 * g * tint[c] + 0.2 * blob * (tint[2 - c] - 0.5) + 0.05 * rng.normal();
          t(b, c, i, j) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
  }
  return t;
}

}  // namespace oracle
