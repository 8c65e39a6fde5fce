#include "foldfinder/cw.hpp"

#include "foldfinder/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace foldfinder {

namespace {

constexpr double kCwConeFloor = 1e-12;

Field clip(const Field& u) {
    const double floor = kCwConeFloor * u.max_abs();
    return Field(u.components(), u.values().cwiseMax(floor));
}

// -tau log( mean exp(-rho / tau) ), evaluated stably, and the softmin weights.
double softmin(const Vector& rho, double tau, Vector* weights) {
    const double lo = rho.minCoeff();
    Vector e = (-(rho.array() - lo) / tau).exp().matrix();
    const double sum = e.sum();
    if (weights) *weights = e / sum;
    return lo - tau * std::log(sum / static_cast<double>(rho.size()));
}

double ray_maximum(double lambda1, double q, const std::vector<std::pair<double, double>>& terms, double c) {
    // h(t) = [lambda1 t^{2-q} - sum s_k t^{deg_k - q}] / c
    bool bounded = false;
    for (const auto& [deg, s] : terms) bounded = bounded || (s > 0.0 && deg > 2.0);
    if (!bounded) return std::numeric_limits<double>::infinity();
    auto slope = [&](double t) {
        double v = (2.0 - q) * lambda1;
        for (const auto& [deg, s] : terms) v -= s * (deg - q) * std::pow(t, deg - 2.0);
        return v;
    };
    double hi = 1.0;
    while (slope(hi) > 0.0) hi *= 2.0;
    double lo = hi * 0.5;
    while (slope(lo) <= 0.0) lo *= 0.5;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    double num = lambda1 * std::pow(t, 2.0 - q);
    for (const auto& [deg, s] : terms) num -= s * std::pow(t, deg - q);
    return num / c;
}

double ray_value(const ModelSpec& spec, double lambda1, const Eigen::VectorXd& theta) {
    // Homogeneity: sum_i g_i(t theta) = sum_k t^{deg_k - 1} s_k with s_k = sum_i d_i term_k(theta).
    const int m = spec.components();
    std::vector<std::pair<double, double>> terms;
    for (const auto& term : spec.terms()) {
        const ModelSpec single("term", m, spec.q(), {term});
        terms.emplace_back(term.degree(), single.g(theta).sum());
    }
    const double c = theta.array().pow(spec.q() - 1.0).sum();
    return ray_maximum(lambda1, spec.q(), terms, c);
}

}  // namespace

Vector cw_ratios(const Problem& p, const Field& u) {
    require_cone_interior(u, kCwConeFloor, "cw_ratios");
    const Vector num = p.laplacian().matrix * u.values() - nodal_g(p, u).values();
    return num.array() / u.values().array().pow(p.q() - 1.0);
}

CwCandidate cw_value(const Problem& p, const Field& u) {
    const Vector rho = cw_ratios(p, u);
    CwCandidate c;
    c.state = u;
    Eigen::Index arg = 0;
    c.lambda_cw = rho.minCoeff(&arg);
    c.active_component = static_cast<int>(arg / u.nodes());
    c.active_node = arg % u.nodes();
    c.gap = rho.maxCoeff() - c.lambda_cw;
    c.delta = stability_index(p, u).delta;
    return c;
}

CwAscentResult cw_ascend(const Problem& p, const Field& init, const CwOptions& opts) {
    require_cone_interior(init, kCwConeFloor, "cw_ascend");
    const double stab_tol = stability_tolerance(p);
    const double q = p.q();
    const SparseMatrix& lap = p.laplacian().matrix;
    const double lap_trace = lap.diagonal().sum();

    CwAscentResult result;
    bool have_best = false;
    auto consider = [&](const Field& state) {
        const CwCandidate c = cw_value(p, state);
        if (c.delta >= -stab_tol && (!have_best || c.lambda_cw > result.best.lambda_cw)) {
            result.best = c;
            have_best = true;
        }
    };

    Field u = clip(init);
    double tau_rel = opts.tau_start;
    double damping = -1.0;  // Levenberg-Marquardt weight of the Laplacian metric; set on first use
    int it = 0;
    int stage_iterations = 0;
    for (; it < opts.max_iterations; ++it) {
        if (u.max_abs() > opts.divergence_bound) {
            result.diverged = true;
            break;
        }
        if (it % opts.stability_every == 0) consider(u);

        const Vector rho = cw_ratios(p, u);
        const double scale = std::max(std::abs(rho.minCoeff()), 1e-300);
        const double tau = tau_rel * scale;
        Vector pi;
        const double value = softmin(rho, tau, &pi);

        // J = d rho / du = U^{1-q} K, K = L - Dg - (q-1) diag(rho u^{q-2}).
        const Vector upow = u.values().array().pow(1.0 - q);
        SparseMatrix k = hessian_operator(p, u, 0.0).matrix;
        k -= SparseMatrix(((q - 1.0) * rho.array() * u.values().array().pow(q - 2.0)).matrix().asDiagonal());
        const SparseMatrix jac = upow.asDiagonal() * k;
        const Vector grad = jac.transpose() * pi;

        // Gauss-Newton curvature of the softmin, -(1/tau) J^T (Pi - pi pi^T) J,
        // regularized by damping * L; the rank-one part is handled by Sherman-Morrison.
        const SparseMatrix jtpj = SparseMatrix(jac.transpose() * pi.asDiagonal() * jac) / tau;
        if (damping < 0.0) damping = 1e-3 * jtpj.diagonal().sum() / lap_trace;

        const double gap = rho.maxCoeff() - rho.minCoeff();
        bool accepted = false;
        double predicted = 0.0;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            const SparseMatrix s0 = jtpj + damping * lap;
            Eigen::SimplicialLLT<SparseMatrix> llt(s0);
            if (llt.info() != Eigen::Success) {
                damping *= 4.0;
                continue;
            }
            const Vector s0g = llt.solve(grad);
            const double beta = grad.dot(s0g) / tau;
            const Vector d = beta < 1.0 ? Vector(s0g / (1.0 - beta)) : s0g;
            predicted = grad.dot(d);
            const Field trial = clip(Field(u.components(), u.values() + d));
            double trial_value = -std::numeric_limits<double>::infinity();
            try {
                trial_value = softmin(cw_ratios(p, trial), tau, nullptr);
            } catch (const DomainError&) {
            }
            if (trial_value > value) {
                u = trial;
                damping = std::max(damping / 3.0, 1e-300);
                accepted = true;
            } else {
                damping *= 4.0;
            }
        }

        const bool final_stage = tau_rel <= opts.tau_end * (1.0 + 1e-12);
        const double stationarity = std::max(predicted, 0.0) / scale;
        ++stage_iterations;
        if (!accepted || stationarity <= opts.gradient_tol || stage_iterations > 500) {
            if (final_stage) {
                result.converged = gap <= opts.gap_tol * scale || !accepted;
                ++it;
                break;
            }
            tau_rel = std::max(tau_rel * 0.1, opts.tau_end);
            stage_iterations = 0;
        }
    }
    result.iterations = it;
    result.capped = it >= opts.max_iterations;
    if (!result.diverged) consider(u);
    if (!have_best) throw NoStableCandidate("cw_ascend: no iterate satisfied delta >= -tol_stab");
    return result;
}

double upper_bound_lambda(const ModelSpec& spec, const Grid& grid, const std::vector<bool>& mask) {
    const double lambda1 = principal_laplacian_eigenvalue(grid, mask);
    const int m = spec.components();
    if (m == 1) return ray_value(spec, lambda1, Eigen::VectorXd::Ones(1));

    double best = -std::numeric_limits<double>::infinity();
    if (m == 2) {
        auto at = [&](double a) {
            Eigen::VectorXd theta(2);
            theta << a, 1.0 - a;
            return ray_value(spec, lambda1, theta);
        };
        constexpr int kSamples = 400;
        int arg = 0;
        for (int k = 0; k <= kSamples; ++k) {
            const double v = at(static_cast<double>(k) / kSamples);
            if (v > best) {
                best = v;
                arg = k;
            }
        }
        if (!std::isfinite(best)) return best;
        // Golden-section refinement around the best sample.
        double lo = std::max(0.0, (arg - 1.0) / kSamples);
        double hi = std::min(1.0, (arg + 1.0) / kSamples);
        const double r = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
        double f1 = at(x1), f2 = at(x2);
        for (int it = 0; it < 100; ++it) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + r * (hi - lo);
                f2 = at(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - r * (hi - lo);
                f1 = at(x1);
            }
        }
        return std::max({best, f1, f2});
    }

    std::mt19937_64 rng(12345);
    std::exponential_distribution<double> expo(1.0);
    for (int k = 0; k < 4000 + m; ++k) {
        Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
        if (k < m) {
            theta[k] = 1.0;
        } else if (k == m) {
            theta.setConstant(1.0 / m);
        } else {
            for (int i = 0; i < m; ++i) theta[i] = expo(rng);
            theta /= theta.sum();
        }
        best = std::max(best, ray_value(spec, lambda1, theta));
    }
    return best;
}

double upper_bound_lambda(const ModelSpec& spec, const Grid& grid) {
    return upper_bound_lambda(spec, grid, std::vector<bool>(static_cast<std::size_t>(grid.nodes()), true));
}

}  // namespace foldfinder
