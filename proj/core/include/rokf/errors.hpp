#pragma once

#include <stdexcept>
#include <string>

namespace rokf {

/// Base class for all numerical failures raised by this library. Catching
/// this (or a specific subclass) lets callers separate numeric trouble from
/// programming errors, which surface as std::invalid_argument instead.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A matrix required to be (strictly) positive definite is not.
struct NotPositiveDefinite : NumericError {
  using NumericError::NumericError;
};

/// An embedding or factor does not have full column rank.
struct RankDeficient : NumericError {
  using NumericError::NumericError;
};

/// An innovation covariance is singular beyond the pseudoinverse tolerance.
struct SingularInnovation : NumericError {
  using NumericError::NumericError;
};

/// A recursion requires spectral radius < 1 but the operator is not stable.
struct Unstable : NumericError {
  using NumericError::NumericError;
};

/// An iteration exceeded its step budget before reaching tolerance.
struct NoConvergence : NumericError {
  using NumericError::NumericError;
};

/// A positive-semidefinite ordering that theory guarantees was violated
/// numerically (signals inconsistent inputs, e.g. a stale stationary cov).
struct OrderingViolation : NumericError {
  using NumericError::NumericError;
};

/// Nested meshes must satisfy the divisibility rule (n_f+1) % (n_c+1) == 0.
struct IncompatibleMeshes : NumericError {
  using NumericError::NumericError;
};

/// A hypothesis of a bound (stability, convergence, positive denominator)
/// failed; the message names which one.
struct AssumptionFailed : NumericError {
  using NumericError::NumericError;
};

/// A time-step system solve hit a numerically singular matrix.
struct SingularStep : NumericError {
  using NumericError::NumericError;
};

} // namespace rokf
