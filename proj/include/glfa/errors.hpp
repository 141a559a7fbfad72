#pragma once

#include <stdexcept>

namespace glfa {

// Optimization or evaluation produced values it cannot proceed with.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; messages carry path and line number.
struct parse_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace glfa
