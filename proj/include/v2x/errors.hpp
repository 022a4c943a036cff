#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace v2x {

// Invalid configuration value. The message names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse: stepping a finished episode, sampling an under-filled memory,
// mismatched dimensions.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A search space exceeds its configured cap.
class CapacityError : public std::runtime_error {
 public:
  CapacityError(const std::string& what, std::uint64_t size)
      : std::runtime_error(what), size_(size) {}
  std::uint64_t size() const { return size_; }

 private:
  std::uint64_t size_;
};

}  // namespace v2x
