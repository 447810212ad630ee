#pragma once

#include <stdexcept>
#include <string>

namespace strategiciv {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes disagree; the message names both dimensions.
class DimensionError : public Error {
  public:
    using Error::Error;
};

/// A regression design (or stage estimate) is rank-deficient or too
/// ill-conditioned to invert under the configured condition cap.
class SingularDesignError : public Error {
  public:
    SingularDesignError(const std::string& what, double min_singular_value)
        : Error(what), min_singular_value_(min_singular_value) {}
    double min_singular_value() const { return min_singular_value_; }

  private:
    double min_singular_value_;
};

/// The finite-sample error bound has a non-positive denominator at this T.
class VacuousBoundError : public Error {
  public:
    using Error::Error;
};

/// A linear objective is constant over the feasible set, so every point
/// is optimal and no single maximizer can be reported.
class DegenerateObjectiveError : public Error {
  public:
    using Error::Error;
};

/// Gradient descent exceeded the iterate-norm guard.
class DivergenceError : public Error {
  public:
    DivergenceError(const std::string& what, long step) : Error(what), step_(step) {}
    long step() const { return step_; }

  private:
    long step_;
};

/// Malformed file contents; the message names the 1-based line where
/// applicable.
class ParseError : public Error {
  public:
    using Error::Error;
};

/// A spec or configuration value violates its documented invariants.
class ValidationError : public Error {
  public:
    using Error::Error;
};

/// I/O failure (unreadable source, unwritable destination).
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace strategiciv
