#pragma once

#include <stdexcept>
#include <string>

namespace agefresh {

/// Bad input: malformed literal, out-of-range parameter, inconsistent model.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (singular system, violated invariant).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace agefresh
