#pragma once

#include <stdexcept>
#include <string>

namespace becv {

/// Base class for every error raised by the codec library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or parameter dimensions do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A coded payload could not be decoded (truncated, corrupted, or inconsistent).
class DecodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace becv
