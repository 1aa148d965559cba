#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qht {

// Base of every failure the library reports.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad inputs or parameters outside an operation's domain. The CLI maps
// every subclass to exit code 2.
class ValidationError : public Error {
public:
  using Error::Error;
};

class InvalidSpec : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class TruncationTooSmall : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class NonpositiveDensity : public ValidationError {
public:
  using ValidationError::ValidationError;
};

class InsufficientData : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// A member of the hardest family with a negative diagonal entry.
class PositivityViolation : public ValidationError {
public:
  PositivityViolation(const std::string& what, std::size_t k) : ValidationError(what), k_(k) {}
  std::size_t first_k() const { return k_; }

private:
  std::size_t k_;
};

// A quadrature or iteration could not reach its tolerance (exit code 3).
class NonConvergence : public Error {
public:
  using Error::Error;
};

// An integral whose integrand is not finite on its range, e.g. a weight
// that outgrows the decay of the function it multiplies.
class DivergentIntegrand : public NonConvergence {
public:
  using NonConvergence::NonConvergence;
};

} // namespace qht
