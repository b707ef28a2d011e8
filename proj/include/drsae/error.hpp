#pragma once

#include <stdexcept>
#include <string>

namespace drsae {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid input: schema, parse, range or config problems.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A required probability is zero or an area has no population mass.
class OverlapError : public InputError {
 public:
  using InputError::InputError;
};

class SingularDesignError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// An estimator cannot be formed from the available data (e.g. a
/// single treatment arm inside an area).
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace drsae
