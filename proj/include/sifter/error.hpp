#pragma once

#include <stdexcept>
#include <string>

namespace sifter {

// Exception hierarchy. The CLI maps each family onto an exit code:
// ValidationError -> 1, IoError -> 2, NumericError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Raised when a statistic is undefined for the given input (constant ranks,
// zero-norm vectors).
class DegenerateInputError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace sifter
