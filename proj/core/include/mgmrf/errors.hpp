#pragma once

#include <stdexcept>
#include <string>

namespace mgmrf {

// Bad user input: malformed files, inconsistent model definitions, schema violations.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure on structurally valid input: indefinite matrices, degenerate
// geometry, non-finite intermediates.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mgmrf
