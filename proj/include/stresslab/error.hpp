#pragma once

#include <stdexcept>
#include <string>

namespace stresslab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required upstream artifact is missing or unreadable (CLI exit code 3).
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular matrices, failed factorizations, non-convergence (CLI exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (CSV rows, JSON documents).
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace stresslab
