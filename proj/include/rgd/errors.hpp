#pragma once

#include <stdexcept>
#include <string>

namespace rgd {

// Bad inputs, missing files, shape mismatches. CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values, diverged solves. CLI maps this to exit code 2.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rgd
