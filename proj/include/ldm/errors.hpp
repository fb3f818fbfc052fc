#pragma once

#include <stdexcept>
#include <string>

namespace ldm {

/// Input file could not be read or parsed; message carries the location.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration or schema violation (CLI maps this to exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure inside a solver (reported, never silently ignored).
struct SolverError : std::runtime_error {
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ldm
