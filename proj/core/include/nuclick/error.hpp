#pragma once

#include <stdexcept>
#include <string>

namespace nuclick {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (size mismatch, empty raster, out-of-window point).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Operation is valid but the current state does not allow it (e.g. annotate before an image exists).
class Conflict : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nuclick
