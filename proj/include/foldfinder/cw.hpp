#pragma once

#include "foldfinder/energy.hpp"
#include "foldfinder/error.hpp"

#include <vector>

namespace foldfinder {

/// Inner value of the Collatz-Wielandt max-min at one state.
struct CwCandidate {
    Field state;
    double lambda_cw = 0.0;  ///< min over (component, node) of the residual ratio
    int active_component = 0;
    Eigen::Index active_node = 0;
    double delta = 0.0;
    double gap = 0.0;  ///< max ratio - min ratio
};

/// Nodal ratios [(-Delta_h u_i)(x) - g_i(u(x))] / u_i(x)^{q-1}, component-major.
Vector cw_ratios(const Problem& p, const Field& u);

/// Restriction of inf_v R(u, v) to nonnegative test directions: the
/// minimum nodal ratio. Also evaluates delta(u).
CwCandidate cw_value(const Problem& p, const Field& u);

struct CwOptions {
    int max_iterations = 20000;
    double tau_start = 1e-1;  ///< softmin temperature, relative to the ratio scale
    double tau_end = 1e-6;
    double gap_tol = 1e-6;       ///< relative to |lambda_cw|
    double gradient_tol = 1e-9;  ///< relative stationarity at the final temperature
    int stability_every = 5;
    double divergence_bound = 1e12;  ///< ||u||_inf beyond which the ascent is declared divergent
};

struct CwAscentResult {
    CwCandidate best;  ///< best stable iterate by lambda_cw
    int iterations = 0;
    bool converged = false;  ///< stationary at the final temperature with gap <= gap_tol
    bool capped = false;     ///< hit max_iterations; best-so-far returned
    bool diverged = false;   ///< amplitude grew without bound (no fold)
};

class NoStableCandidate : public Error {
public:
    using Error::Error;
};

/// Projected ascent on the softmin-smoothed lambda_cw with an annealed
/// temperature. Steps are Levenberg-Marquardt steps on the Gauss-Newton
/// model of the softmin, damped in the Laplacian metric. Iterates are clipped to the cone floor
/// 1e-12 ||u||_inf; delta is evaluated every `stability_every` iterations
/// and only iterates with delta >= -stability_tolerance are kept.
///
/// Throws NoStableCandidate if no evaluated iterate was stable.
CwAscentResult cw_ascend(const Problem& p, const Field& init, const CwOptions& opts = {});

/// Upper bound Lambda = max over the positive cone of
/// [lambda_1(mask) sum u_i - sum g_i(u)] / sum u_i^{q-1}.
/// Exact 1-D maximization for m = 1; sampled rays with golden-section
/// refinement for m = 2; random rays for larger m.
double upper_bound_lambda(const ModelSpec& spec, const Grid& grid, const std::vector<bool>& mask);
double upper_bound_lambda(const ModelSpec& spec, const Grid& grid);

}  // namespace foldfinder
