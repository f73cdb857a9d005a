#pragma once

#include <stdexcept>
#include <string>

namespace ktb {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failures. The command-line driver maps these to exit status 2.
class NumericError : public Error {
 public:
  using Error::Error;
};

class BoundaryMembershipError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : NumericError(what + " (iterations=" + std::to_string(iterations) +
                     ", residual=" + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class DegenerateChordError : public NumericError {
 public:
  using NumericError::NumericError;
};

class GrazingError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DomainError : public NumericError {
 public:
  using NumericError::NumericError;
};

class ConvexityError : public NumericError {
 public:
  using NumericError::NumericError;
};

class PrecisionError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Two sampled maps agree to round-off on the whole grid.
class IndistinguishableError : public NumericError {
 public:
  using NumericError::NumericError;
};

class PlanError : public NumericError {
 public:
  using NumericError::NumericError;
};

class DegenerateDataError : public NumericError {
 public:
  using NumericError::NumericError;
};

class PreconditionError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed configuration input. Carries the 1-based line number when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace ktb
