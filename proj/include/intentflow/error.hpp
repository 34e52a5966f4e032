#pragma once

#include <stdexcept>
#include <string>

namespace intentflow {

// Base of every error raised by the library. The CLI maps `is_validation()`
// errors to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_validation() const noexcept { return false; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  bool is_validation() const noexcept override { return true; }
};

// Malformed input document (JSON, CSV, key strings).
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Mutually exclusive or missing options.
class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Algorithm parameter out of its valid range (k >= n, min_samples >= n, ...).
class ParameterError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Binary interchange file does not match the expected layout.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A quantity is mathematically undefined for the given input
// (zero-norm cosine, validity of an all-noise labeling, ...).
class UndefinedError : public Error {
 public:
  using Error::Error;
};

}  // namespace intentflow
