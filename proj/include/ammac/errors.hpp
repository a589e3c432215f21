#ifndef AMMAC_ERRORS_HPP
#define AMMAC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ammac {

// Base class for all library errors. CLI maps subclasses to exit codes:
// invalid input -> 2, numerical failure -> 3.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// An input violated a type invariant (message says which one and by how much).
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

// A distribution lost all its mass points.
class DegenerateDistribution : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// log_sum_exp over a mixture with no positive weight.
class EmptyMixture : public Error {
 public:
  using Error::Error;
};

// Invalid quadrature / optimizer / run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Rule refinement failed to reach the requested relative tolerance.
class QuadratureDivergence : public Error {
 public:
  using Error::Error;
};

// Monte Carlo configuration problem (bad sample count, stream misuse).
class SeedError : public Error {
 public:
  using Error::Error;
};

// The literal rate formula and the generic entropy-difference path disagree.
// Carries both values so the caller can inspect the discrepancy.
class FormulaMismatch : public Error {
 public:
  FormulaMismatch(const std::string& msg, double generic_bits, double literal_bits)
      : Error(msg), generic(generic_bits), literal(literal_bits) {}
  double generic;
  double literal;
};

}  // namespace ammac

#endif
