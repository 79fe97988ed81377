#pragma once

#include <stdexcept>
#include <string>

namespace cirbo {

/// Violated operation precondition (bad sizes, empty inputs, out-of-range knobs).
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Point sets whose dimensionality disagrees with the kernel.
class DimensionError : public PreconditionError {
 public:
  explicit DimensionError(const std::string& what) : PreconditionError(what) {}
};

/// Cholesky failed even after the maximum jitter escalation.
class SingularModelError : public std::runtime_error {
 public:
  explicit SingularModelError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine could not bracket or converge.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cirbo
