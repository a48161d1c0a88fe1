#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hebb/layers.hpp"
#include "hebb/tensor.hpp"

namespace hebb {

inline constexpr int kNumClasses = 10;

// Per-channel means over the four spatial quadrants, concatenated as
// (top-left, top-right, bottom-left, bottom-right), channels contiguous within
// a quadrant. Returns a B x 4C matrix.
Eigen::MatrixXd quadrants_features(const Tensor4& layer_output);

// Least-squares map from features (plus a constant column) to one-hot scores.
struct LinearDecoder {
  Eigen::MatrixXd weights;  // (feature_dim + 1) x classes, last row is the bias
  double ridge = 0.0;
  int feature_dim = 0;

  Eigen::MatrixXd scores(const Eigen::MatrixXd& features) const;
  // Argmax per row, ties to the lowest class index.
  std::vector<int> predict(const Eigen::MatrixXd& features) const;
};

// ridge_scale * trace(X^T X) / F over the feature columns.
double default_ridge(const Eigen::MatrixXd& features, double ridge_scale = 1e-3);

// Solves (X^T X + ridge * P) W = X^T Y with X = [features | 1] and P the
// identity on the feature rows; the bias row is not penalized. Cholesky.
// Throws DataError when the system is singular.
LinearDecoder fit_decoder(const Eigen::MatrixXd& features, std::span<const int> labels, double ridge,
                          int num_classes = kNumClasses);

double evaluate_accuracy(const LinearDecoder& decoder, const Eigen::MatrixXd& features,
                         std::span<const int> labels);

// Probe features for each layer of a network, computed chunk by chunk.
std::vector<Eigen::MatrixXd> probe_features(const Network& network, const Tensor4& images, int chunk = 256);

struct ProbeResult {
  std::string probe;  // "l1_quadrants", "l2_quadrants", "final_output"
  double accuracy = 0.0;
  double train_accuracy = 0.0;
  int n_train = 0;
  int n_test = 0;
};

// Name of the probe reading layer `index` out of `count` layers.
std::string probe_name(int index, int count);

// Fits one decoder per layer on the training features and scores the test set.
std::vector<ProbeResult> run_probes(const Network& network, const Tensor4& train_images,
                                    std::span<const int> train_labels, const Tensor4& test_images,
                                    std::span<const int> test_labels);

}  // namespace hebb
