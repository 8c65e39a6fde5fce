#pragma once

#include "foldfinder/energy.hpp"

namespace foldfinder {

/// Principal eigenvalue of the second variation at lambda = R(u, u).
struct StabilityResult {
    double delta = 0.0;
    Field eigenfield;
    double lambda_used = 0.0;
    double residual = 0.0;
};

/// delta(u): smallest eigenvalue of hessian_operator(u, rayleigh_nl(u)) in
/// the unweighted sense H phi = delta phi. `tol` bounds ||H phi - delta phi||.
StabilityResult stability_index(const Problem& p, const Field& u, double tol);
StabilityResult stability_index(const Problem& p, const Field& u);

/// Classification threshold 1e-9 * (largest stencil coefficient).
double stability_tolerance(const Problem& p);

/// delta(u) >= -stability_tolerance(p).
bool is_stable(const Problem& p, const Field& u);
bool is_stable(const Problem& p, const StabilityResult& result);

}  // namespace foldfinder
