#ifndef LEQG_ERRORS_HPP_
#define LEQG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace leqg {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model assumption (controllability, observability, structural
/// hypothesis such as A = 0) does not hold for the given data.
class ModelAssumptionError : public Error {
 public:
  using Error::Error;
};

/// The risk parameter is at or above the critical value: the synthesis
/// problem has no admissible solution and the cost is infinite.
class ThetaAboveCriticalError : public Error {
 public:
  ThetaAboveCriticalError(double theta, const std::string& what)
      : Error(what), theta_(theta) {}
  double theta() const noexcept { return theta_; }

 private:
  double theta_;
};

/// Numerical failure distinct from non-existence: the solver could not
/// extract a trustworthy solution (bad subspace conditioning, stalled
/// refinement). Callers scanning for existence boundaries must not treat
/// this as "no solution".
class IllConditionedError : public Error {
 public:
  using Error::Error;
};

/// A matrix required to be diagonalizable fails the conditioning test.
class NonDiagonalizableError : public Error {
 public:
  using Error::Error;
};

/// rs_structured_X requires epsilon = 0.
class EpsilonNotZeroError : public ModelAssumptionError {
 public:
  using ModelAssumptionError::ModelAssumptionError;
};

/// Simulated state exceeded the overflow guard (unstable loop or dt too
/// large). Carries the time at which the guard tripped.
class NumericalBlowupError : public Error {
 public:
  NumericalBlowupError(double time, const std::string& what)
      : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The Monte Carlo exponent left the representable range.
class EstimatorOverflowError : public Error {
 public:
  EstimatorOverflowError(double max_exponent, const std::string& what)
      : Error(what), max_exponent_(max_exponent) {}
  double max_exponent() const noexcept { return max_exponent_; }

 private:
  double max_exponent_;
};

}  // namespace leqg

#endif  // LEQG_ERRORS_HPP_
