#pragma once

#include <stdexcept>
#include <string>

namespace shaftpower {

/// Invalid configuration or precondition violated by the caller. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor/vector dimensions do not line up.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Unreadable, missing or malformed input data. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query fell outside the weather grid on one axis.
class OutOfDomainError : public DataError {
 public:
  OutOfDomainError(std::string axis, const std::string& what)
      : DataError(what), axis_(std::move(axis)) {}
  const std::string& axis() const noexcept { return axis_; }

 private:
  std::string axis_;
};

/// NaN/Inf produced or consumed by a numerical routine. CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace shaftpower
