#pragma once

#include <stdexcept>
#include <string>

namespace merr {

/// Precondition or configuration violation by the caller.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-finite intermediate, inconsistent geometry, ...
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The regularized system could not be factorized even after jitter escalation.
class SingularSystemError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed or unreadable input files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace merr
