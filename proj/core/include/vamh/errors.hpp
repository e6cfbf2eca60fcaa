#pragma once

#include <stdexcept>
#include <string>

namespace vamh {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration: bad weights, mismatched component counts,
/// unknown sampler names. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A split chain produced too few regenerations to form an estimate.
/// The CLI maps this to exit code 3.
class InsufficientRegenerations : public Error {
 public:
  using Error::Error;
};

/// The chain occupies a state with zero target density.
class InvalidStateError : public Error {
 public:
  using Error::Error;
};

/// Numeric argument outside its admissible domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A regeneration factor exceeded one; the supplied minorization
/// functions do not satisfy their sandwich inequalities.
class MinorizationViolation : public Error {
 public:
  using Error::Error;
};

/// Discrete state space larger than the dense enumeration guard.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// The stationary vector of an enumerated kernel disagrees with the
/// instance's target vector.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Numerical quadrature failed to reach its tolerance.
class OracleError : public Error {
 public:
  using Error::Error;
};

/// Rejection sampler for a truncated law exhausted its attempt budget.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// A fixed-R replication ran past its step budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace vamh
