#pragma once

#include <stdexcept>
#include <string>

namespace tsn {

// Bad values passed by a caller (CLI exit code 2).
struct ArgumentError : std::runtime_error {
    explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally invalid input files (CLI exit code 2).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Broken configuration such as a zero-rate link or malformed GCL (exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Semantically impossible request: unreachable destination, empty input where
// flows are required (CLI exit code 3).
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tsn
