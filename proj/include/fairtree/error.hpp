#pragma once

#include <stdexcept>
#include <string>

namespace fairtree {

// Base error for all library failures. CLI maps subtypes to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid inputs: bad schema, malformed CSV, out-of-range options.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// Internal consistency failures: infeasible formulations, extraction
// mismatches. Indicates a bug rather than bad user input.
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what) : Error(what) {}
};

}  // namespace fairtree
