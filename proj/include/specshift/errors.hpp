#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace specshift {

// Operands that do not conform to the same algebra or block shape.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation (p < 1, eps <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A function fixture cannot supply what was asked of it (derivative depth,
// decay envelope, class witness).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Least-squares reconstruction could not resolve the unknowns beyond the
// expected polynomial kernel.
class ReconstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace specshift
