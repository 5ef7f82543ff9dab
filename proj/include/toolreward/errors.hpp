#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace toolreward {

/// File could not be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input is well-formed but violates a contract (bad config, oversubscribed
/// split, error mix above 1, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SizeMismatchError : public ValidationError {
 public:
  SizeMismatchError(std::size_t lhs, std::size_t rhs)
      : ValidationError("size mismatch: " + std::to_string(lhs) + " vs " + std::to_string(rhs)) {}
};

}  // namespace toolreward
