#pragma once

#include <stdexcept>
#include <string>

namespace surfdarcy {

/// Base class of all errors raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad case id, out-of-range parameter, unwritable path.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Geometric or algebraic failure during a computation.
class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace surfdarcy
