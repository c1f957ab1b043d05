#pragma once

#include <stdexcept>
#include <string>

namespace caslab {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad input: invariant violations, malformed configs, out-of-range arguments.
class ValidationError : public Error {
  public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

/// Numerical failure: non-convergence, divergence, non-finite intermediate.
class NumericalError : public Error {
  public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// Filesystem / parse failure.
class IoError : public Error {
  public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace caslab
