#pragma once

#include <stdexcept>
#include <string>

namespace qmele {

/// Invalid argument or parameter outside its admissible region.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unreadable input data (files, cells, lengths).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base for failures of the numerical machinery itself.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A recursion produced a non-finite value or exceeded the volatility ceiling.
class NumericOverflow : public NumericError {
 public:
  NumericOverflow(const std::string& what, std::size_t t)
      : NumericError(what + " at t=" + std::to_string(t)), t_(t) {}
  std::size_t time_index() const noexcept { return t_; }

 private:
  std::size_t t_;
};

class DegenerateSample : public NumericError {
 public:
  using NumericError::NumericError;
};

class SingularInformation : public NumericError {
 public:
  using NumericError::NumericError;
};

class InsufficientData : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedOrder : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Scenario or command-line configuration that violates the schema.
class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

}  // namespace qmele
