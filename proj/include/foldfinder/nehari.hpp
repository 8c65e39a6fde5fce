#pragma once

#include "foldfinder/energy.hpp"

#include <cstdint>
#include <vector>

namespace foldfinder {

struct SolveReport {
    Field state;
    double lambda = 0.0;
    double energy = 0.0;
    double delta = 0.0;
    double residual_norm = 0.0;  ///< relative, see relative_residual()
    int iterations = 0;
    bool converged = false;
};

/// ||F(u, lambda)||_W divided by the sum of the norms of its three terms.
double relative_residual(const Problem& p, const Field& u, double lambda);

/// Smallest t > 0 with R(t v) = lambda and dR/dt > 0.
///
/// Throws FiberEmpty when lambda exceeds the fiber maximum along v.
double project_nehari(const Problem& p, const Field& v, double lambda);

/// The unique positive solution of -Delta w = lambda w^{q-1}.
Field solve_sublinear(const Problem& p, double lambda);

struct NehariOptions {
    double tol = 1e-10;
    int max_iterations = 2000;
    /// Switch to Newton steps once the relative residual is below this and
    /// the Hessian is positive definite.
    double newton_switch = 1e-3;
    /// Descent stops after this many consecutive steps without a relative
    /// energy decrease above 1e-14.
    int stagnation_limit = 25;
};

/// Minimizes phi(., lambda) over the stable Nehari set by Sobolev-gradient
/// descent with Armijo backtracking; every trial point is clipped to the
/// cone and projected with project_nehari.
SolveReport solve_nehari(const Problem& p, double lambda, const Field& init, const NehariOptions& opts = {});
/// Same, initialized at w_lambda.
SolveReport solve_nehari(const Problem& p, double lambda, const NehariOptions& opts = {});

/// Damped Newton on F(u, lambda) = 0 inside the positive cone.
SolveReport solve_damped_newton(const Problem& p, double lambda, const Field& init, double tol = 1e-10,
                                int max_iterations = 100);

/// Random positive initial states: w_lambda scaled by a random amplitude and
/// modulated by a random smooth positive profile. Deterministic in the seed.
Field random_initial_state(const Problem& p, double lambda, std::uint64_t seed);

struct MultistartResult {
    std::vector<SolveReport> nehari;
    std::vector<SolveReport> newton;

    int successes() const;
    /// Converged solutions that are also stable.
    int stable_successes(double stab_tol) const;
};

/// Runs `restarts` Nehari descents and damped-Newton solves from
/// random_initial_state(seed + k). Work is spread over `threads` workers;
/// results are ordered by restart index.
MultistartResult multistart(const Problem& p, double lambda, int restarts, std::uint64_t seed, int threads = 1,
                            const NehariOptions& opts = {});

}  // namespace foldfinder
