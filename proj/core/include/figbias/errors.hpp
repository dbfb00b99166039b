#pragma once

#include <stdexcept>
#include <string>

namespace figbias {

/// Malformed or inconsistent input data (bad records, unmapped labels,
/// unresolvable spans, reserved-marker collisions).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration: unknown names, bad flag values, missing
/// required settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace figbias
