#include "hebb/evaluation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "hebb/errors.hpp"

namespace hebb {

Eigen::MatrixXd quadrants_features(const Tensor4& layer_output) {
  const Shape4& s = layer_output.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("quadrants_features: spatial dims must be even, got " + s.str());
  }
  const int hh = s.h / 2;
  const int hw = s.w / 2;
  const double inv = 1.0 / (static_cast<double>(hh) * hw);
  Eigen::MatrixXd out(s.n, 4 * s.c);
  for (int b = 0; b < s.n; ++b) {
    for (int q = 0; q < 4; ++q) {
      const int i0 = (q / 2) * hh;
      const int j0 = (q % 2) * hw;
      for (int c = 0; c < s.c; ++c) {
        double sum = 0.0;
        for (int i = i0; i < i0 + hh; ++i) {
          for (int j = j0; j < j0 + hw; ++j) sum += layer_output(b, c, i, j);
        }
        out(b, q * s.c + c) = sum * inv;
      }
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd with_bias_column(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd x(features.rows(), features.cols() + 1);
  x.leftCols(features.cols()) = features;
  x.col(features.cols()).setOnes();
  return x;
}

void check_labels(const Eigen::MatrixXd& features, std::span<const int> labels, int num_classes) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("decoder: " + std::to_string(features.rows()) + " feature rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw DataError("decoder: label " + std::to_string(y) + " out of range");
  }
}

}  // namespace

Eigen::MatrixXd LinearDecoder::scores(const Eigen::MatrixXd& features) const {
  if (features.cols() != feature_dim) {
    throw ShapeError("decoder expects " + std::to_string(feature_dim) + " features, got " +
                     std::to_string(features.cols()));
  }
  return features * weights.topRows(feature_dim) + Eigen::VectorXd::Ones(features.rows()) * weights.row(feature_dim);
}

std::vector<int> LinearDecoder::predict(const Eigen::MatrixXd& features) const {
  const Eigen::MatrixXd s = scores(features);
  std::vector<int> out(s.rows());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < s.cols(); ++c) {
      if (s(r, c) > s(r, best)) best = static_cast<int>(c);
    }
    out[r] = best;
  }
  return out;
}

double default_ridge(const Eigen::MatrixXd& features, double ridge_scale) {
  if (features.cols() == 0) return 0.0;
  return ridge_scale * features.squaredNorm() / static_cast<double>(features.cols());
}

LinearDecoder fit_decoder(const Eigen::MatrixXd& features, std::span<const int> labels, double ridge,
                          int num_classes) {
  check_labels(features, labels, num_classes);
  if (!(ridge >= 0.0)) throw DataError("fit_decoder: ridge must be >= 0");
  if (!features.allFinite()) throw DataError("fit_decoder: non-finite features");

  const Eigen::MatrixXd x = with_bias_column(features);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(features.rows(), num_classes);
  for (std::size_t r = 0; r < labels.size(); ++r) y(static_cast<Eigen::Index>(r), labels[r]) = 1.0;

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  gram.diagonal().head(features.cols()).array() += ridge;

  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const double scale = std::max(gram.diagonal().maxCoeff(), 1e-300);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-13 || !(gram.diagonal().minCoeff() > 1e-14 * scale)) {
    throw DataError("fit_decoder: normal equations are singular; use a nonzero ridge");
  }
  LinearDecoder dec;
  dec.weights = llt.solve(x.transpose() * y);
  if (!dec.weights.allFinite()) throw DataError("fit_decoder: solution is not finite; use a nonzero ridge");
  dec.ridge = ridge;
  dec.feature_dim = static_cast<int>(features.cols());
  return dec;
}

double evaluate_accuracy(const LinearDecoder& decoder, const Eigen::MatrixXd& features,
                         std::span<const int> labels) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("evaluate_accuracy: " + std::to_string(features.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) return 0.0;
  const std::vector<int> pred = decoder.predict(features);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) hits += pred[r] == labels[r];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

std::vector<Eigen::MatrixXd> probe_features(const Network& network, const Tensor4& images, int chunk) {
  const int n = images.batch();
  const std::vector<Shape4> shapes = output_shapes(network.config());
  std::vector<Eigen::MatrixXd> feats;
  for (const Shape4& s : shapes) feats.emplace_back(n, 4 * s.c);
  for (int start = 0; start < n; start += chunk) {
    const int count = std::min(chunk, n - start);
    const std::vector<Tensor4> outs = network.forward(slice_batch(images, start, count));
    for (std::size_t l = 0; l < outs.size(); ++l) feats[l].middleRows(start, count) = quadrants_features(outs[l]);
  }
  return feats;
}

std::string probe_name(int index, int count) {
  if (index == count - 1) return "final_output";
  return "l" + std::to_string(index + 1) + "_quadrants";
}

std::vector<ProbeResult> run_probes(const Network& network, const Tensor4& train_images,
                                    std::span<const int> train_labels, const Tensor4& test_images,
                                    std::span<const int> test_labels) {
  const std::vector<Eigen::MatrixXd> train = probe_features(network, train_images);
  const std::vector<Eigen::MatrixXd> test = probe_features(network, test_images);
  std::vector<ProbeResult> results;
  const int count = static_cast<int>(train.size());
  for (int l = 0; l < count; ++l) {
    const double ridge = default_ridge(train[l], network.config().ridge_scale);
    const LinearDecoder dec = fit_decoder(train[l], train_labels, ridge);
    ProbeResult r;
    r.probe = probe_name(l, count);
    r.accuracy = evaluate_accuracy(dec, test[l], test_labels);
    r.train_accuracy = evaluate_accuracy(dec, train[l], train_labels);
    r.n_train = static_cast<int>(train_labels.size());
    r.n_test = static_cast<int>(test_labels.size());
    results.push_back(r);
  }
  return results;
}

}  // namespace hebb
