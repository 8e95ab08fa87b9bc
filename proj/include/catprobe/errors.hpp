#pragma once

#include <stdexcept>
#include <string>

namespace catprobe {

// Base class for all catprobe errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid parameters or configuration (bad ranges, dimension caps, unknown keys).
class config_error : public error {
 public:
  explicit config_error(const std::string& what) : error(what) {}
};

// Malformed data handed to an operation (dimension mismatch, invalid sample).
class data_error : public error {
 public:
  explicit data_error(const std::string& what) : error(what) {}
};

// An estimator was asked for a result it cannot produce (empty stream, too few samples).
class estimation_error : public error {
 public:
  explicit estimation_error(const std::string& what) : error(what) {}
};

// A numerical routine failed to converge or produced non-finite values.
class numerical_error : public error {
 public:
  explicit numerical_error(const std::string& what) : error(what) {}
};

// A documented precondition or call contract was violated.
class precondition_error : public error {
 public:
  explicit precondition_error(const std::string& what) : error(what) {}
};

}  // namespace catprobe
