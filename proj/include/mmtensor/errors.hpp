#pragma once

#include <stdexcept>
#include <string>

namespace mmt {

/// Malformed input data: wrong shapes, bad CSV cells, out-of-range scores.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver produced something it should not have (non-finite values,
/// failed factorization).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mmt
