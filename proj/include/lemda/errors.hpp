#pragma once

#include <stdexcept>
#include <string>

namespace lemda {

// Invalid or unknown configuration; CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss during training; CLI exit code 3.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lemda
