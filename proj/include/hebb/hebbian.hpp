#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "hebb/tensor.hpp"

namespace hebb {

enum class HebbRule {
  PlainHebb,  // dw ~ y x
  Instar,     // dw ~ y (x - w)
  Oja,        // dw ~ y (x - y w)
};

std::string_view to_string(HebbRule rule);
std::optional<HebbRule> parse_hebb_rule(std::string_view text);

// Signals one layer step needs for plasticity.
//   x       layer input after standardization
//   preact  conv2d_valid(x, w), no bias
//   y_real  binary output that drives plasticity (the values substituted into
//           the surrogate before differentiating)
struct PlasticityBatch {
  Tensor4 x;
  Tensor4 preact;
  Tensor4 y_real;
};

// Throws ShapeError unless x, preact, y_real and w line up.
void check_batch(const PlasticityBatch& batch, const WeightTensor& w);

// Surrogate output whose gradient, evaluated at y_real, is the rule's update:
//   PlainHebb  preact
//   Instar     preact - |w_o|^2 / 2
//   Oja        preact - |w_o|^2 / 2 * y_real
Tensor4 surrogate_value(HebbRule rule, const Tensor4& preact, const WeightTensor& w, const Tensor4& y_real);

// Update summed over batch and positions, computed per patch from unfold():
// delta_o = sum y * x_patch, y * (x_patch - w_o), or y * (x_patch - y * w_o).
WeightTensor hebbian_update_direct(HebbRule rule, const PlasticityBatch& batch, const WeightTensor& w);

// Same update obtained as -dL/dw for L = -1/2 sum s^2, s = surrogate_value(...),
// with dL/ds evaluated at s = y_real. Backpropagates through the surrogate and
// the convolution (weight gradient = correlation of x with dL/ds).
WeightTensor hebbian_update_via_gradient(HebbRule rule, const PlasticityBatch& batch, const WeightTensor& w);

// The gradient path split into pieces so a batch can be fed in chunks:
// add() sums dL/dw contributions in double, delta() returns -dL/dw. Chunking
// along the batch gives the same result bit for bit.
struct HebbianAccumulator {
  std::vector<double> grad;        // convolution part, one entry per weight
  std::vector<double> norm_coeff;  // per filter, multiplies w_o

  explicit HebbianAccumulator(const WeightTensor& w);
  void add(HebbRule rule, const PlasticityBatch& batch, const WeightTensor& w);
  WeightTensor delta(const WeightTensor& w) const;
};

// Single linear unit y = w.x trained online with Oja's rule over `steps`
// presentations cycling through `data`. Returns the raw (not renormalized)
// weight vector.
std::vector<double> oja_fixed_point_demo(const std::vector<std::vector<double>>& data, int steps, double lr,
                                         std::uint64_t seed = 1);

}  // namespace hebb
