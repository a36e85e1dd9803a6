#pragma once

#include <stdexcept>
#include <string>

namespace varinfer {

/// Invalid input: shape mismatch, bad parameters, malformed configuration.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested problem size is outside what an algorithm supports.
class UnsupportedSizeError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The observed value has zero marginal probability.
class EvidenceZeroError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace varinfer
