#pragma once

#include <stdexcept>
#include <string>

namespace gemkit {

/// Malformed or inconsistent input (bad dimensions, negative masses, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver or estimator failed on input that was accepted as valid.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weighted aggregate requested over a window whose weights sum to zero.
class UndefinedAggregateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace gemkit
