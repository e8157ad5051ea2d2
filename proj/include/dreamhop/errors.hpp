#pragma once

#include <stdexcept>
#include <string>

namespace dreamhop {

// Raised when an argument lies outside the mathematical domain of an
// operation (loads above one, probabilities outside [0,1], r = 0 in 1/r, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised when dimensions of inputs do not fit together.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by numerical kernels: eigensolver failures, non-finite integrands.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a requested run would not fit the memory or runtime budget.
// The message carries a scaled-down configuration that would.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dreamhop
