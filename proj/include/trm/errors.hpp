#pragma once

#include <stdexcept>
#include <string>

namespace trm {

// Bad inputs: malformed files, shape mismatches, out-of-range values.
// The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure at runtime (NaN/Inf losses, diverged training).
// The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace trm
