#ifndef SHARPINEQ_ERRORS_HPP
#define SHARPINEQ_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sharpineq {

/** Inverse stereographic projection evaluated at (or too close to) the pole. */
struct SingularityError : std::domain_error {
    using std::domain_error::domain_error;
};

/** An input that must be positive (pointwise or in the mean) is not. */
struct PositivityError : std::domain_error {
    using std::domain_error::domain_error;
};

/** An orthogonality or normalization precondition is violated. */
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/** A quadrature or eigenvalue estimate failed to stabilize under refinement. */
struct AccuracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Spectral tail of an expansion is too large for the requested operation. */
struct RegularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** A lifted function blows up at the sample nodes (insufficient decay). */
struct LiftUnboundedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Adaptive time step shrank below the representable floor. */
struct StiffnessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/** Not enough history samples for a finite-difference diagnostic. */
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sharpineq

#endif
