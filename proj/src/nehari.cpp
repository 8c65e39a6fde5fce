#include "foldfinder/nehari.hpp"

#include "foldfinder/error.hpp"
#include "foldfinder/spectrum.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

namespace foldfinder {

namespace {

constexpr double kClipFloor = 1e-12;

Field clip_to_cone(const Field& u) {
    const double floor = kClipFloor * std::max(u.max_abs(), std::numeric_limits<double>::min());
    return Field(u.components(), u.values().cwiseMax(floor));
}

void finish_report(const Problem& p, SolveReport& report, double tol) {
    report.energy = phi(p, report.state, report.lambda);
    report.residual_norm = relative_residual(p, report.state, report.lambda);
    bool ok = report.residual_norm <= tol;
    if (ok) {
        report.delta = stability_index(p, report.state).delta;
        ok = report.energy < 0.0 && report.delta > 0.0;
    }
    report.converged = ok;
}

}  // namespace

double relative_residual(const Problem& p, const Field& u, double lambda) {
    const Vector lap = p.laplacian().matrix * u.values();
    const Vector sub = lambda * u.values().array().pow(p.q() - 1.0).matrix();
    const Vector g = nodal_g(p, u).values();
    const double scale = weighted_norm(p.weights(), lap) + weighted_norm(p.weights(), sub) +
                         weighted_norm(p.weights(), g);
    const double res = weighted_norm(p.weights(), lap - sub - g);
    return scale > 0.0 ? res / scale : res;
}

double project_nehari(const Problem& p, const Field& v, double lambda) {
    if (!(lambda > 0.0)) throw InvalidArgument("project_nehari: lambda must be positive");
    require_cone_interior(v, kEnergyConeFloor, "project_nehari");
    const FiberMap fiber_map(p, v);
    const double tmax = fiber_map.argmax();
    double hi = tmax;
    if (std::isfinite(tmax)) {
        const double fmax = fiber_map.value(tmax);
        if (fmax < lambda) throw FiberEmpty("project_nehari: lambda exceeds the fiber maximum", fmax);
        if (fmax == lambda) return tmax;
    } else {
        hi = 1.0;
        int guard = 0;
        while (fiber_map.value(hi) < lambda) {
            hi *= 2.0;
            if (++guard > 2000) throw FiberEmpty("project_nehari: fiber did not reach lambda", fiber_map.value(hi));
        }
    }
    double lo = hi;
    int guard = 0;
    do {
        lo *= 0.5;
        if (++guard > 3000 || lo == 0.0) throw DomainError("project_nehari: could not bracket the fiber root");
    } while (fiber_map.value(lo) >= lambda);

    // Safeguarded Newton on f(t) = R(t v) - lambda, increasing on [lo, hi].
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = fiber_map.value(t) - lambda;
        if (f == 0.0) return t;
        (f < 0.0 ? lo : hi) = t;
        const double df = fiber_map.derivative(t);
        double next = df > 0.0 ? t - f / df : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 1e-16 * t || hi - lo <= 4e-16 * hi) return next;
        t = next;
    }
    return t;
}

Field solve_sublinear(const Problem& p, double lambda) {
    if (!(lambda > 0.0)) throw InvalidArgument("solve_sublinear: lambda must be positive");
    const double q = p.q();
    const CholeskySolver lap(p.laplacian());
    Field w(p.components(), lap.solve(Vector::Constant(p.laplacian().dimension(), lambda)));

    // Monotone fixed point until the iterate is in Newton's basin.
    int it = 0;
    for (; it < 200; ++it) {
        Vector next = lap.solve(Vector(lambda * w.values().array().pow(q - 1.0).matrix()));
        const double change = (next - w.values()).lpNorm<Eigen::Infinity>() / next.lpNorm<Eigen::Infinity>();
        w.values() = std::move(next);
        if (change < 1e-3) break;
    }
    const Problem sub(p.grid(), sublinear_model(p.components(), q));
    for (int k = 0; k < 50; ++k) {
        const Field r = phi_grad(sub, w, lambda);
        const CholeskySolver jac(hessian_operator(sub, w, lambda));
        const Vector step = jac.solve(r.values());
        w.values() -= step;
        require_cone_interior(w, kEnergyConeFloor, "solve_sublinear");
        if (step.lpNorm<Eigen::Infinity>() <= 1e-15 * w.max_abs()) break;
    }
    return w;
}

SolveReport solve_nehari(const Problem& p, double lambda, const Field& init, const NehariOptions& opts) {
    if (!(lambda > 0.0)) throw InvalidArgument("solve_nehari: lambda must be positive");
    require_cone_interior(init, kEnergyConeFloor, "solve_nehari");
    SolveReport report;
    report.lambda = lambda;

    Field u = clip_to_cone(init);
    u.values() *= project_nehari(p, u, lambda);  // FiberEmpty propagates: nothing to descend from

    const CholeskySolver sobolev(p.laplacian());
    double energy = phi(p, u, lambda);
    int stagnant = 0;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        const Field r = phi_grad(p, u, lambda);
        const double rel = relative_residual(p, u, lambda);
        if (rel <= opts.tol) break;

        if (rel < opts.newton_switch) {
            try {
                const CholeskySolver hess(hessian_operator(p, u, lambda));
                Field trial(u.components(), u.values() - hess.solve(r.values()));
                if ((trial.values().array() > kEnergyConeFloor * trial.max_abs()).all() &&
                    relative_residual(p, trial, lambda) < rel) {
                    u = std::move(trial);
                    energy = phi(p, u, lambda);
                    continue;
                }
            } catch (const IndefiniteOperator&) {
            }
        }

        const Vector d = -sobolev.solve(r.values());
        const double slope = weighted_dot(p.weights(), r.values(), d);
        double step = 1.0;
        bool accepted = false;
        for (int k = 0; k < 40; ++k, step *= 0.5) {
            Field trial = clip_to_cone(Field(u.components(), u.values() + step * d));
            try {
                trial.values() *= project_nehari(p, trial, lambda);
            } catch (const FiberEmpty&) {
                continue;
            }
            const double e = phi(p, trial, lambda);
            if (e <= energy + 1e-4 * step * slope) {
                const double decrease = (energy - e) / std::max(std::abs(energy), 1e-300);
                stagnant = decrease > 1e-14 ? 0 : stagnant + 1;
                u = std::move(trial);
                energy = e;
                accepted = true;
                break;
            }
        }
        if (!accepted || stagnant >= opts.stagnation_limit) {
            ++it;
            break;
        }
    }
    report.state = std::move(u);
    report.iterations = it;
    finish_report(p, report, opts.tol);
    return report;
}

SolveReport solve_nehari(const Problem& p, double lambda, const NehariOptions& opts) {
    return solve_nehari(p, lambda, solve_sublinear(p, lambda), opts);
}

SolveReport solve_damped_newton(const Problem& p, double lambda, const Field& init, double tol, int max_iterations) {
    require_cone_interior(init, kEnergyConeFloor, "solve_damped_newton");
    SolveReport report;
    report.lambda = lambda;
    Field u = clip_to_cone(init);
    double res = relative_residual(p, u, lambda);
    int it = 0;
    for (; it < max_iterations && res > tol; ++it) {
        Vector step;
        try {
            step = solve_general(hessian_operator(p, u, lambda), phi_grad(p, u, lambda).values());
        } catch (const SingularSystem&) {
            break;
        }
        bool accepted = false;
        for (double s = 1.0; s > 1e-6; s *= 0.5) {
            Field trial = clip_to_cone(Field(u.components(), u.values() - s * step));
            const double r = relative_residual(p, trial, lambda);
            if (r < (1.0 - 1e-4 * s) * res) {
                u = std::move(trial);
                res = r;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    report.state = std::move(u);
    report.iterations = it;
    report.energy = phi(p, report.state, lambda);
    report.residual_norm = res;
    report.converged = res <= tol;
    if (report.converged) report.delta = stability_index(p, report.state).delta;
    return report;
}

Field random_initial_state(const Problem& p, double lambda, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Field w = solve_sublinear(p, lambda);
    Field u = w;
    const double amplitude = std::exp(std::log(0.2) + unit(rng) * std::log(25.0));
    const Grid& g = p.grid();
    for (int c = 0; c < p.components(); ++c) {
        double coef[2][3];
        for (auto& axis : coef) {
            for (double& k : axis) k = unit(rng) - 0.5;
        }
        for (Eigen::Index x = 0; x < g.nodes(); ++x) {
            const auto xy = g.coordinates(x);
            double s = 0.0;
            for (int a = 0; a < g.dimension(); ++a) {
                for (int k = 0; k < 3; ++k) {
                    s += coef[a][k] * std::sin((k + 1) * std::numbers::pi * xy[static_cast<std::size_t>(a)] / g.extents[static_cast<std::size_t>(a)]);
                }
            }
            u(c, x) = amplitude * w(c, x) * std::exp(s);
        }
    }
    return u;
}

int MultistartResult::successes() const {
    int n = 0;
    for (const auto& r : nehari) n += r.converged ? 1 : 0;
    for (const auto& r : newton) n += r.converged ? 1 : 0;
    return n;
}

int MultistartResult::stable_successes(double stab_tol) const {
    int n = 0;
    for (const auto& r : nehari) n += (r.converged && r.delta >= -stab_tol) ? 1 : 0;
    for (const auto& r : newton) n += (r.converged && r.delta >= -stab_tol) ? 1 : 0;
    return n;
}

MultistartResult multistart(const Problem& p, double lambda, int restarts, std::uint64_t seed, int threads,
                            const NehariOptions& opts) {
    MultistartResult out;
    out.nehari.resize(static_cast<std::size_t>(restarts));
    out.newton.resize(static_cast<std::size_t>(restarts));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < restarts; k = next++) {
            const Field init = random_initial_state(p, lambda, seed + static_cast<std::uint64_t>(k));
            auto& nr = out.nehari[static_cast<std::size_t>(k)];
            try {
                nr = solve_nehari(p, lambda, init, opts);
            } catch (const Error&) {
                nr = SolveReport{init, lambda, 0.0, 0.0, std::numeric_limits<double>::infinity(), 0, false};
            }
            auto& dn = out.newton[static_cast<std::size_t>(k)];
            try {
                dn = solve_damped_newton(p, lambda, init, opts.tol);
            } catch (const Error&) {
                dn = SolveReport{init, lambda, 0.0, 0.0, std::numeric_limits<double>::infinity(), 0, false};
            }
        }
    };
    const int workers = std::clamp(threads, 1, std::max(restarts, 1));
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace foldfinder
