#pragma once

#include <stdexcept>
#include <string>

namespace foldfinder {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument shapes, sizes or mismatched grids.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A state left the set on which an operation is defined (e.g. the positive
/// cone, or a Rayleigh denominator vanished).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An iteration hit its cap or stagnated. Carries the best residual reached.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double achieved_residual, int iterations)
        : Error(what), residual_(achieved_residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// A symmetric operator expected to be positive definite showed negative curvature.
class IndefiniteOperator : public Error {
public:
    using Error::Error;
};

/// Bordered (or other) linear system is numerically singular.
class SingularSystem : public Error {
public:
    SingularSystem(const std::string& what, double condition_estimate)
        : Error(what), condition_(condition_estimate) {}

    double condition_estimate() const noexcept { return condition_; }

private:
    double condition_;
};

/// The fiber t -> R(t v) never reaches the requested level with positive slope.
class FiberEmpty : public Error {
public:
    FiberEmpty(const std::string& what, double fiber_maximum)
        : Error(what), fiber_maximum_(fiber_maximum) {}

    double fiber_maximum() const noexcept { return fiber_maximum_; }

private:
    double fiber_maximum_;
};

/// A branch has no detectable fold.
class NoFold : public Error {
public:
    using Error::Error;
};

}  // namespace foldfinder
