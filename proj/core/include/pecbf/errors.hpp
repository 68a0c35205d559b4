#pragma once

#include <stdexcept>

namespace pecbf {

/// Invalid or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Internal solver failure; must not happen on the convex subproblems (CLI exit code 3).
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pecbf
