#pragma once

#include <stdexcept>
#include <string>

namespace sinkmatch {

/// Raised when external input (files, configs, shapes supplied by the
/// caller) violates a documented contract. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an internal invariant that should hold by construction is
/// violated. Indicates a defect, not a user error. Maps to CLI exit code 3.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace sinkmatch
