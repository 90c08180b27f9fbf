#pragma once

#include <stdexcept>
#include <string>

namespace agghoo {

/// Invalid input: bad dimensions, non-finite values, out-of-range parameters.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// An iterative solver stopped before reaching its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// The homotopy could not be continued (singular active-set system).
class PathError : public std::runtime_error {
 public:
  explicit PathError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace agghoo
