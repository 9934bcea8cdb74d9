#pragma once

#include <stdexcept>
#include <string>

namespace fpbridge {

// Bad arguments / config. CLI maps this to exit code 2.
struct ValidationError : std::invalid_argument {
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical self-check tripped (mass leak, degenerate conditioning, ...). CLI exit code 3.
struct NumericsError : std::runtime_error {
    explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fpbridge
