#pragma once

#include <stdexcept>
#include <string>

namespace qfc {

// Input outside the physical or mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A numerical routine (quadrature, optimizer, root finder) failed to meet
// its tolerance. The message carries the diagnostics.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative fit that ran out of iterations. Keeps the last iterate so the
// caller can inspect or report it.
class FitError : public NumericError {
 public:
  FitError(const std::string& what, double last_iterate)
      : NumericError(what), last_iterate_(last_iterate) {}

  double last_iterate() const noexcept { return last_iterate_; }

 private:
  double last_iterate_;
};

}  // namespace qfc
