#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace srgp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Computes A * block for an implicitly represented matrix A.
using MatrixAction = std::function<Matrix(const Matrix&)>;

// Error hierarchy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class DataError : public Error {
  public:
    using Error::Error;
};

class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Raised by seq_update when the sketch is wider than the grown matrix.
class SketchTooWideError : public DimensionError {
  public:
    using DimensionError::DimensionError;
};

/// Raised when an apply closure is not symmetric enough to be eigendecomposed.
class NonSymmetricError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// Singular inner system in a Woodbury solve; carries the reciprocal condition estimate.
class SingularSystemError : public NumericalError {
  public:
    SingularSystemError(const std::string& what, double rcond) : NumericalError(what), rcond_(rcond) {}
    double rcond() const noexcept { return rcond_; }

  private:
    double rcond_;
};

/// Constraint violation on hyperparameters (negative coefficients, non-positive lengthscale).
class ConstraintError : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace srgp
