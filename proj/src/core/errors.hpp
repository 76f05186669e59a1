#pragma once

#include <stdexcept>
#include <string>

namespace spdnn {

// bad shapes, hyperparameters, files, or model contracts; maps to exit code 2
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// runtime numerical failures (divergence, degenerate constructions, failed
// searches, empty estimation support); maps to exit code 3
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spdnn
