#pragma once

#include <stdexcept>
#include <string>

namespace occlab {

// Root of every error the library throws. Each subclass corresponds to one of
// the failure classes the CLI maps onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument value (point outside [0,1], exponent < 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A required hypothesis does not hold for the supplied parameters.
class HypothesisError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Request lies outside a tabulated range.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Monotonicity / concavity violation of a tabulated function.
class ConcavityError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  OverflowError(const std::string& what, int achieved_level)
      : Error(what), achieved_level_(achieved_level) {}
  int achieved_level() const noexcept { return achieved_level_; }

 private:
  int achieved_level_;
};

class UnsupportedFamilyError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace occlab
