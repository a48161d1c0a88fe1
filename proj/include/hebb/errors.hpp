#pragma once

#include <stdexcept>
#include <string>

namespace hebb {

// Dimension or layout mismatch between tensors.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: non-finite data, singular systems, too few samples.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files: dataset records, checkpoints, config text.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A checkpoint or config whose dims disagree with what the caller expects.
class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hebb
