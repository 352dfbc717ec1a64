#pragma once

#include <stdexcept>
#include <string>

namespace quietclock {

// Invalid parameters, flags or configuration. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A run asked for more in-memory samples than the configured budget allows.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Artifact read/write failure; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace quietclock
