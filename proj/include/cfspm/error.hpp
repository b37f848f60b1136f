// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cfspm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents that do not satisfy an operation's shape rule.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or input. The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A target-subject label was read while that subject was held out.
class LeakageError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfspm
