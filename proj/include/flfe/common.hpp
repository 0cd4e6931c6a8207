#pragma once

#include <stdexcept>
#include <string>

namespace flfe {

/// Invalid configuration or invalid use of an interface (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flfe
