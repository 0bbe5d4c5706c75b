#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace graphboost {

/// Dense row-major matrix; rows are samples (graph nodes).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: malformed CSV, schema mismatches, degenerate labels.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or incompatible model file.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values during training or inference.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace graphboost
