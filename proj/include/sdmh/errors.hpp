#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdmh {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Degrees of freedom of a test statistic are not positive.
class DegreesOfFreedomError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A numerical procedure failed (factorization, optimizer, evaluation).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CholeskyError : public NumericalError {
 public:
  CholeskyError(std::size_t pivot, double value)
      : NumericalError("matrix is not positive definite (pivot " + std::to_string(pivot) +
                       ", value " + std::to_string(value) + ")"),
        pivot_(pivot),
        value_(value) {}

  std::size_t pivot() const noexcept { return pivot_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t pivot_;
  double value_;
};

// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sdmh
