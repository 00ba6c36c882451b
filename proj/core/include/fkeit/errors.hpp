#pragma once

#include <stdexcept>
#include <string>

namespace fkeit {

/// Configuration / precondition violations; CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// NaN/overflow or solver breakdown during a run; CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Query outside a type's supported capability (e.g. boundary frame of the
/// whole space, analytic drift of a piecewise medium).
class UnsupportedQueryError : public std::runtime_error {
 public:
  explicit UnsupportedQueryError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fkeit
