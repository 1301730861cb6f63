#pragma once

#include <stdexcept>
#include <string>

namespace grvs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Degenerate or invalid geometric input (zero depth, bad depth range, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values showing up where they must not (e.g. the training loss).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace grvs
