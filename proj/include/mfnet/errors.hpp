#pragma once

#include <stdexcept>
#include <string>

namespace mfnet {

// Precondition / validation failures: dimension mismatch, non-finite input,
// out-of-range parameters. Maps to CLI exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failures: oracle non-convergence, training divergence.
// Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Malformed input files (IDX headers, truncated payloads, bad CSV rows).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mfnet
