#pragma once

#include <stdexcept>
#include <string>

namespace tsdm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, out-of-domain inputs, malformed files or configs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative estimator exhausted its budget or no fit survived filtering.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A weighted sample is too concentrated to support a Dirichlet fit. EM
/// callers treat this as "discard the component", not as a fatal error.
class DegenerateDataError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsdm
