#include "foldfinder/fold.hpp"

#include "foldfinder/nehari.hpp"
#include "foldfinder/spectrum.hpp"

#include <cmath>
#include <limits>

namespace foldfinder {

namespace {

void sign_normalize(Field& v) {
    Eigen::Index imax = 0;
    v.values().cwiseAbs().maxCoeff(&imax);
    if (v.values()[imax] < 0.0) v.values() = -v.values();
}

bool in_cone(const Field& u) {
    const double floor = kEnergyConeFloor * u.max_abs();
    return u.max_abs() > 0.0 && (u.values().array() > floor).all();
}

double hv_relative(const Problem& p, const Field& u, const Field& v, double lambda) {
    const LinearOperator h = hessian_operator(p, u, lambda);
    const Vector hv = h.matrix * v.values();
    const Vector lv = p.laplacian().matrix * v.values();
    const double scale = weighted_norm(p.weights(), lv) + weighted_norm(p.weights(), Vector(lv - hv));
    const double r = weighted_norm(p.weights(), hv);
    return scale > 0.0 ? r / scale : r;
}

struct AugmentedResidual {
    Vector f;
    Vector hv;
    double norm_eq = 0.0;
    double rel_f = 0.0;
    double rel_hv = 0.0;

    double worst() const { return std::max({rel_f, rel_hv, std::abs(norm_eq)}); }
};

AugmentedResidual augmented_residual(const Problem& p, const Field& u, const Field& v, double lambda) {
    AugmentedResidual r;
    r.f = phi_grad(p, u, lambda).values();
    r.hv = hessian_operator(p, u, lambda).matrix * v.values();
    r.norm_eq = p.dot(v, v) - 1.0;
    r.rel_f = relative_residual(p, u, lambda);
    r.rel_hv = hv_relative(p, u, v, lambda);
    return r;
}

// d/du [H(u, lambda) v] as a nodewise block matrix, by central differences of
// the Hessian in each component with a relative nodal step.
SparseMatrix third_derivative_action(const Problem& p, const Field& u, const Field& v, double lambda, double rel_step) {
    const int m = u.components();
    const Eigen::Index n = u.nodes();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n * m * m));
    for (int k = 0; k < m; ++k) {
        Field up = u, um = u;
        Vector eps = rel_step * u.component(k);
        up.component(k) += eps;
        um.component(k) -= eps;
        const Vector diff = hessian_operator(p, up, lambda).matrix * v.values() -
                            hessian_operator(p, um, lambda).matrix * v.values();
        for (int i = 0; i < m; ++i) {
            for (Eigen::Index x = 0; x < n; ++x) {
                const double val = diff[i * n + x] / (2.0 * eps[x]);
                if (val != 0.0) t.emplace_back(i * n + x, k * n + x, val);
            }
        }
    }
    SparseMatrix out(n * m, n * m);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

struct Corrected {
    Field u;
    double lambda = 0.0;
    int iterations = 0;
    bool ok = false;
};

// Newton at fixed lambda.
Corrected correct_natural(const Problem& p, Field u, double lambda, const ContinuationOptions& opts) {
    Corrected c;
    c.lambda = lambda;
    try {
        double res = relative_residual(p, u, lambda);
        for (int it = 0; it < opts.max_corrector_iterations; ++it) {
            if (res <= opts.corrector_tol) {
                c.ok = true;
                break;
            }
            const Vector du = solve_general(hessian_operator(p, u, lambda), phi_grad(p, u, lambda).values());
            Field next(u.components(), u.values() - du);
            if (!in_cone(next)) break;
            const double next_res = relative_residual(p, next, lambda);
            if (!(next_res < res)) break;
            u = std::move(next);
            res = next_res;
            c.iterations = it + 1;
        }
        c.ok = c.ok || res <= opts.corrector_tol;
    } catch (const Error&) {
        c.ok = false;
    }
    c.u = std::move(u);
    return c;
}

// Newton on F = 0 with the hyperplane constraint <u - u_ref, t_u> + (lambda - lambda_ref) t_lambda = 0.
Corrected correct_on_plane(const Problem& p, Field u, double lambda, const Field& u_ref, double lambda_ref,
                           const Field& t_u, double t_lambda, const ContinuationOptions& opts) {
    Corrected c;
    const double q = p.q();
    const Vector wt = p.weights().cwiseProduct(t_u.values());
    try {
        for (int it = 0; it <= opts.max_corrector_iterations; ++it) {
            const double res = relative_residual(p, u, lambda);
            const double plane = wt.dot(u.values() - u_ref.values()) + (lambda - lambda_ref) * t_lambda;
            if (res <= opts.corrector_tol && std::abs(plane) <= 1e-12 * (1.0 + std::abs(lambda))) {
                c.ok = true;
                c.iterations = it;
                break;
            }
            if (it == opts.max_corrector_iterations) break;
            const LinearOperator h = hessian_operator(p, u, lambda);
            const Vector col = -u.values().array().pow(q - 1.0).matrix();
            const BorderedSolution s = solve_bordered(h, col, wt, t_lambda, -phi_grad(p, u, lambda).values(), -plane);
            Field next(u.components(), u.values() + s.x);
            if (!in_cone(next)) break;
            u = std::move(next);
            lambda += s.y;
        }
    } catch (const Error&) {
        c.ok = false;
    }
    c.u = std::move(u);
    c.lambda = lambda;
    return c;
}

// Unit tangent (weighted norm) of the branch at a solution, oriented along `orient`.
std::pair<Field, double> branch_tangent(const Problem& p, const Field& u, double lambda, const Field& orient_u,
                                        double orient_lambda) {
    const LinearOperator h = hessian_operator(p, u, lambda);
    const Vector col = -u.values().array().pow(p.q() - 1.0).matrix();
    const Vector wt = p.weights().cwiseProduct(orient_u.values());
    const BorderedSolution s = solve_bordered(h, col, wt, orient_lambda, Vector::Zero(u.size()), 1.0);
    Field tu(u.components(), s.x);
    double tl = s.y;
    const double nrm = std::sqrt(p.dot(tu, tu) + tl * tl);
    tu.values() /= nrm;
    tl /= nrm;
    return {tu, tl};
}

BranchRecord make_record(const Problem& p, const Field& u, double lambda, int iterations, double arclength,
                         bool arclength_mode) {
    BranchRecord r;
    r.lambda = lambda;
    r.sup_norm = u.max_abs();
    r.energy = phi(p, u, lambda);
    r.delta = stability_index(p, u).delta;
    r.corrector_iterations = iterations;
    r.arclength = arclength;
    r.pseudo_arclength = arclength_mode;
    r.state = u;
    return r;
}

}  // namespace

double spectral_scale(const Problem& p) { return principal_laplacian_eigenvalue(p.grid()); }

FoldPoint moore_spence_solve(const Problem& p, const Field& u0, const Field& v0, double lambda0,
                             const MooreSpenceOptions& opts) {
    require_cone_interior(u0, kEnergyConeFloor, "moore_spence_solve");
    if (!(p.norm(v0) > 0.0)) throw InvalidArgument("moore_spence_solve: initial null direction is zero");
    const double q = p.q();
    const Eigen::Index n = u0.size();

    Field u = u0;
    Field v = v0;
    v.values() /= p.norm(v);
    double lambda = lambda0;

    FoldPoint best;
    double best_worst = std::numeric_limits<double>::infinity();
    std::vector<double> history;

    auto snapshot = [&](const AugmentedResidual& r, int it) {
        FoldPoint f;
        f.u = u;
        f.v = v;
        f.lambda = lambda;
        f.residual_f = r.rel_f;
        f.residual_hv = r.rel_hv;
        f.residual_norm = std::abs(r.norm_eq);
        f.newton_iterations = it;
        return f;
    };

    for (int it = 0;; ++it) {
        const AugmentedResidual r = augmented_residual(p, u, v, lambda);
        const double worst = r.worst();
        history.push_back(worst);
        if (worst < best_worst) {
            best_worst = worst;
            best = snapshot(r, it);
        }
        if (worst <= opts.tol) break;
        if (it >= opts.max_iterations) throw FoldDivergence("moore_spence_solve: iteration cap reached", best);
        if (history.size() > 5 && worst > 0.5 * history[history.size() - 6]) {
            throw FoldDivergence("moore_spence_solve: residual did not halve over 5 steps", best);
        }

        const LinearOperator h = hessian_operator(p, u, lambda);
        const SparseMatrix t = third_derivative_action(p, u, v, lambda, opts.fd_step);

        // A = [[H, 0], [T, H]]
        std::vector<Triplet> trips;
        trips.reserve(static_cast<std::size_t>(2 * h.matrix.nonZeros() + t.nonZeros()));
        for (int k = 0; k < h.matrix.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator e(h.matrix, k); e; ++e) {
                trips.emplace_back(e.row(), e.col(), e.value());
                trips.emplace_back(e.row() + n, e.col() + n, e.value());
            }
        }
        for (int k = 0; k < t.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator e(t, k); e; ++e) trips.emplace_back(e.row() + n, e.col(), e.value());
        }
        LinearOperator a;
        a.matrix.resize(2 * n, 2 * n);
        a.matrix.setFromTriplets(trips.begin(), trips.end());
        a.weights = p.weights().replicate(2, 1);
        a.symmetric = false;

        Vector c(2 * n);
        c.head(n) = -u.values().array().pow(q - 1.0).matrix();
        c.tail(n) = -(q - 1.0) * (u.values().array().pow(q - 2.0) * v.values().array()).matrix();
        Vector b = Vector::Zero(2 * n);
        b.tail(n) = 2.0 * p.weights().cwiseProduct(v.values());
        Vector rhs(2 * n);
        rhs.head(n) = -r.f;
        rhs.tail(n) = -r.hv;

        const BorderedSolution s = solve_bordered(a, c, b, 0.0, rhs, -r.norm_eq);

        // Damp only to stay inside the cone.
        double step = 1.0;
        Field next_u(u.components(), u.values() + s.x.head(n));
        while (!in_cone(next_u) && step > 1e-6) {
            step *= 0.5;
            next_u.values() = u.values() + step * s.x.head(n);
        }
        if (!in_cone(next_u)) throw DomainError("moore_spence_solve: iterate left the positive cone");
        u = std::move(next_u);
        v.values() += step * s.x.tail(n);
        lambda += step * s.y;
    }

    FoldPoint out = best;
    sign_normalize(out.v);
    const StabilityResult stab = stability_index(p, out.u);
    out.delta = stab.delta;
    out.eigen_alignment = std::abs(p.dot(stab.eigenfield, out.v)) / (p.norm(stab.eigenfield) * p.norm(out.v));
    out.converged = std::abs(out.delta) <= 1e-6 * spectral_scale(p);
    return out;
}

FoldPoint moore_spence_from_state(const Problem& p, const Field& u0, const MooreSpenceOptions& opts) {
    const StabilityResult stab = stability_index(p, u0);
    return moore_spence_solve(p, u0, stab.eigenfield, stab.lambda_used, opts);
}

Branch continue_branch(const Problem& p, double lambda_start, double step, int max_records,
                       const ContinuationOptions& opts) {
    if (!(step > 0.0) || max_records < 1) throw InvalidArgument("continue_branch: need step > 0 and max_records >= 1");
    const SolveReport start = solve_nehari(p, lambda_start);
    if (!start.converged) {
        throw ConvergenceError("continue_branch: initial Nehari solve failed", start.residual_norm, start.iterations);
    }

    Branch branch;
    Field u = start.state;
    double lambda = lambda_start;
    double arclength = 0.0;
    branch.records.push_back(make_record(p, u, lambda, start.iterations, arclength, false));

    // Natural-parameter phase.
    Field prev_u = u;
    double prev_lambda = lambda;
    bool have_prev = false;
    bool arclength_mode = false;
    while (static_cast<int>(branch.records.size()) < max_records) {
        Field guess = u;
        if (have_prev) {
            guess.values() += (u.values() - prev_u.values()) * (step / (lambda - prev_lambda));
        } else {
            try {
                const LinearOperator h = hessian_operator(p, u, lambda);
                guess.values() += step * solve_general(h, Vector(u.values().array().pow(p.q() - 1.0).matrix()));
            } catch (const Error&) {
            }
        }
        if (!in_cone(guess)) guess = u;
        const Corrected c = correct_natural(p, guess, lambda + step, opts);
        if (!c.ok || c.iterations > opts.degraded_iterations) {
            arclength_mode = true;
            break;
        }
        const double ds = std::sqrt(p.dot(Field(u.components(), c.u.values() - u.values()),
                                           Field(u.components(), c.u.values() - u.values())) +
                                    step * step);
        prev_u = u;
        prev_lambda = lambda;
        u = c.u;
        lambda = c.lambda;
        have_prev = true;
        arclength += ds;
        branch.records.push_back(make_record(p, u, lambda, c.iterations, arclength, false));
        const auto& r = branch.records;
        if (r[r.size() - 2].delta > 0.0 && r.back().delta <= 0.0) {
            branch.fold_bracketed = true;
            return branch;
        }
    }
    if (!arclength_mode) return branch;

    // Pseudo-arclength phase.
    branch.switched_to_arclength = true;
    const double s_scale = std::sqrt(p.dot(u, u) + lambda * lambda);
    const double ds_min = opts.min_step * s_scale;
    const double ds_max = opts.max_step * s_scale;
    Field orient_u = have_prev ? Field(u.components(), u.values() - prev_u.values()) : p.zero_field();
    double orient_lambda = have_prev ? lambda - prev_lambda : 1.0;
    auto [tu, tl] = branch_tangent(p, u, lambda, orient_u, orient_lambda);
    double ds = std::clamp(0.5 * step, ds_min, ds_max);
    int successes = 0;
    while (static_cast<int>(branch.records.size()) < max_records) {
        const Field pred_u(u.components(), u.values() + ds * tu.values());
        const double pred_lambda = lambda + ds * tl;
        Corrected c;
        if (in_cone(pred_u)) c = correct_on_plane(p, pred_u, pred_lambda, pred_u, pred_lambda, tu, tl, opts);
        if (!c.ok) {
            ds *= 0.5;
            successes = 0;
            if (ds < ds_min) throw ConvergenceError("continue_branch: arclength step underflow", ds, 0);
            continue;
        }
        const Field new_u = c.u;
        const double new_lambda = c.lambda;
        auto [ntu, ntl] = branch_tangent(p, new_u, new_lambda, tu, tl);
        u = new_u;
        lambda = new_lambda;
        tu = ntu;
        tl = ntl;
        arclength += ds;
        branch.records.push_back(make_record(p, u, lambda, c.iterations, arclength, true));
        const auto& r = branch.records;
        if (r[r.size() - 2].delta > 0.0 && r.back().delta <= 0.0) {
            branch.fold_bracketed = true;
            break;
        }
        if (++successes >= 3) {
            ds = std::min(ds * 1.3, ds_max);
            successes = 0;
        }
    }
    return branch;
}

FoldDetection detect_fold(const Problem& p, const Branch& branch, double tol) {
    const auto& r = branch.records;
    std::size_t k = r.size();
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
        if (r[i].delta > 0.0 && r[i + 1].delta <= 0.0) {
            k = i;
            break;
        }
    }
    if (k == r.size()) throw NoFold("detect_fold: delta never changes sign along the branch");

    const BranchRecord& a = r[k];
    const BranchRecord& b = r[k + 1];
    Field chord_u(a.state.components(), b.state.values() - a.state.values());
    double chord_l = b.lambda - a.lambda;
    const double nrm = std::sqrt(p.dot(chord_u, chord_u) + chord_l * chord_l);
    chord_u.values() /= nrm;
    chord_l /= nrm;

    ContinuationOptions copts;
    copts.max_corrector_iterations = 30;
    auto probe = [&](double s) {
        const Field ref(a.state.components(), (1.0 - s) * a.state.values() + s * b.state.values());
        const double ref_l = (1.0 - s) * a.lambda + s * b.lambda;
        Corrected c = correct_on_plane(p, ref, ref_l, ref, ref_l, chord_u, chord_l, copts);
        if (!c.ok) throw ConvergenceError("detect_fold: corrector failed inside the bracket", s, 0);
        return c;
    };

    double lo = 0.0, hi = 1.0;
    Corrected mid;
    int steps = 0;
    for (; steps < 60 && hi - lo > 1e-13; ++steps) {
        const double s = 0.5 * (lo + hi);
        mid = probe(s);
        const double delta = stability_index(p, mid.u).delta;
        (delta > 0.0 ? lo : hi) = s;
        if (delta == 0.0) break;
    }

    FoldDetection out;
    out.bracket_lo = a.lambda;
    out.bracket_hi = b.lambda;
    out.bisection_steps = steps;
    out.lambda_bisect = mid.lambda;
    out.fold = moore_spence_from_state(p, mid.u);
    out.lambda_moore_spence = out.fold.lambda;
    if (std::abs(out.lambda_bisect - out.lambda_moore_spence) > tol) {
        throw ConvergenceError("detect_fold: bisection and Moore-Spence estimates disagree",
                               std::abs(out.lambda_bisect - out.lambda_moore_spence), steps);
    }
    return out;
}

}  // namespace foldfinder
