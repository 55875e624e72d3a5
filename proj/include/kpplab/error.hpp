#pragma once

#include <stdexcept>
#include <string>

namespace kpplab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied input was violated.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A declared pathwise or statistical invariant failed.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// The numerics broke down (NaN, unstable step, event budget exhausted).
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw UsageError(message);
}

}  // namespace kpplab
