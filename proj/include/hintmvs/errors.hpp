#pragma once

#include <stdexcept>
#include <string>

namespace hintmvs {

// Bad user input: malformed files, missing fields, invalid arguments.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated call contract (depth <= 0, mismatched dimensions, ...).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& msg) : std::invalid_argument(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hintmvs
