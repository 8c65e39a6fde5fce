#pragma once

#include "foldfinder/energy.hpp"
#include "foldfinder/error.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace foldfinder {

/// A converged (or best-effort) solution of the augmented fold system
///   F(u, lambda) = 0,  H(u, lambda) v = 0,  <v, v> = 1.
struct FoldPoint {
    Field u;
    Field v;  ///< null direction, quadrature-normalized, largest-magnitude entry positive
    double lambda = 0.0;
    double delta = 0.0;
    double residual_f = 0.0;     ///< relative ||F||
    double residual_hv = 0.0;    ///< relative ||H v||
    double residual_norm = 0.0;  ///< |<v, v> - 1|
    double eigen_alignment = 0.0;  ///< |cos| between v and the principal eigenfield at u
    int newton_iterations = 0;
    bool converged = false;
};

/// Raised when the augmented Newton iteration diverges; carries the best iterate.
class FoldDivergence : public ConvergenceError {
public:
    FoldDivergence(const std::string& what, FoldPoint best)
        : ConvergenceError(what, std::max({best.residual_f, best.residual_hv, best.residual_norm}),
                           best.newton_iterations),
          best_(std::move(best)) {}

    const FoldPoint& best() const { return best_; }

private:
    FoldPoint best_;
};

struct MooreSpenceOptions {
    double tol = 1e-10;
    int max_iterations = 40;
    double fd_step = 1e-6;  ///< relative nodal step of the third-derivative differences
};

/// Spectral scale used for delta tolerances at folds: the principal
/// eigenvalue of -Delta_h on the grid.
double spectral_scale(const Problem& p);

/// Newton's method on the augmented system with bordered linear solves.
/// Derivatives of H(u) v with respect to u are central differences of
/// hessian_operator. Throws FoldDivergence if the residual fails to halve
/// over 5 consecutive steps or the iteration cap is reached, DomainError if
/// the iterate leaves the cone.
FoldPoint moore_spence_solve(const Problem& p, const Field& u0, const Field& v0, double lambda0,
                             const MooreSpenceOptions& opts = {});

/// Starts Moore-Spence from a state alone: v0 = principal eigenfield at u,
/// lambda0 = R(u).
FoldPoint moore_spence_from_state(const Problem& p, const Field& u0, const MooreSpenceOptions& opts = {});

struct BranchRecord {
    double lambda = 0.0;
    double sup_norm = 0.0;
    double energy = 0.0;
    double delta = 0.0;
    int corrector_iterations = 0;
    double arclength = 0.0;
    bool pseudo_arclength = false;
    Field state;
};

struct Branch {
    std::vector<BranchRecord> records;
    bool fold_bracketed = false;
    bool switched_to_arclength = false;
    std::string direction = "increasing-lambda";
};

struct ContinuationOptions {
    double corrector_tol = 1e-11;
    int max_corrector_iterations = 15;
    int degraded_iterations = 5;  ///< natural stepping switches to arclength above this
    double min_step = 1e-6;       ///< arclength bounds, relative to ||(u, lambda)|| at the switch
    double max_step = 0.1;
};

/// Traces the stable branch from the Nehari solution at lambda_start.
/// Natural-parameter steps of size `step` with a secant predictor and Newton
/// corrector; switches to pseudo-arclength when the corrector degrades.
/// Stops after max_records or once delta changes sign (fold bracketed).
Branch continue_branch(const Problem& p, double lambda_start, double step, int max_records,
                       const ContinuationOptions& opts = {});

struct FoldDetection {
    double lambda_bisect = 0.0;
    double lambda_moore_spence = 0.0;
    double bracket_lo = 0.0;  ///< lambda at the last stable record
    double bracket_hi = 0.0;  ///< lambda at the first unstable record
    FoldPoint fold;
    int bisection_steps = 0;
};

/// Bisection on the sign of delta between the bracketing records (each probe
/// is re-corrected onto the branch), then Moore-Spence from the midpoint.
/// Throws NoFold if delta never changes sign, ConvergenceError if the two
/// estimates differ by more than tol.
FoldDetection detect_fold(const Problem& p, const Branch& branch, double tol);

}  // namespace foldfinder
