#pragma once

#include <stdexcept>
#include <string>

namespace sparsefactor {

/// Base class for all errors raised by this library.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite or otherwise unusable input data.
class invalid_data_error : public error {
 public:
  using error::error;
};

/// Too few observations for the requested computation.
class insufficient_data_error : public error {
 public:
  using error::error;
};

/// An argument is outside its valid range (bad gamma, bad dimensions, ...).
class parameter_error : public error {
 public:
  using error::error;
};

/// The implied covariance is numerically singular.
class singular_model_error : public error {
 public:
  using error::error;
};

/// A factorization or other numerical step failed.
class numerical_error : public error {
 public:
  using error::error;
};

/// The degrees-of-freedom calibration residual has no root on its bracket.
class calibration_error : public error {
 public:
  using error::error;
};

/// The EM objective decreased; indicates a bug, never expected in normal use.
class ascent_violation_error : public error {
 public:
  using error::error;
};

}  // namespace sparsefactor
