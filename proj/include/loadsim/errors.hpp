#pragma once

#include <stdexcept>
#include <string>

namespace loadsim {

// Bad user input: config files, CLI values, spec fields out of range.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Geometry or numeric setup that cannot produce a meaningful model
// (degenerate wedge, pile that does not fit the domain, ...).
struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / IO trouble while reading or writing artifacts.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace loadsim
