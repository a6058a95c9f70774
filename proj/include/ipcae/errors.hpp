#pragma once

#include <stdexcept>
#include <string>

namespace ipcae {

// Thrown when tensor shapes or dimensions do not match an operation's contract.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on invalid configuration (bad variant/shape combinations, bad flags,
// schema violations). Maps to CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on malformed input files (CSV, checkpoint). Maps to CLI exit code 1.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when a computation produces non-finite values where the contract
// forbids them (e.g. NaN loss mid-training). Maps to CLI exit code 2.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ipcae
