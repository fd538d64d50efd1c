#pragma once

#include <stdexcept>
#include <string>

namespace vcincs {

// Raised when an iterative numerical routine fails to converge or a
// factorization breaks down.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised when a computation would exceed a configured size limit.
class CapacityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed or inconsistent run configurations.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace vcincs
