#include "foldfinder/energy.hpp"

#include "foldfinder/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace foldfinder {

namespace {

Eigen::VectorXd node_values(const Field& u, Eigen::Index node) {
    Eigen::VectorXd x(u.components());
    for (int c = 0; c < u.components(); ++c) x[c] = u(c, node);
    return x;
}

void check_match(const Problem& p, const Field& u, const char* what) {
    if (u.components() != p.components() || u.nodes() != p.grid().nodes()) {
        throw InvalidArgument(std::string(what) + ": field does not match problem");
    }
}

Field abs_field(const Field& u) { return Field(u.components(), u.values().cwiseAbs()); }

}  // namespace

Problem::Problem(Grid grid, ModelSpec model)
    : grid_(std::move(grid)), model_(std::move(model)), laplacian_(laplacian_operator(grid_, model_.components())) {}

double Problem::dot(const Field& a, const Field& b) const { return weighted_dot(weights(), a.values(), b.values()); }

double Problem::norm(const Field& a) const { return weighted_norm(weights(), a.values()); }

double Problem::dirichlet_energy(const Field& a) const {
    return weighted_dot(weights(), laplacian_.matrix * a.values(), a.values());
}

void require_cone_interior(const Field& u, double rel_floor, const char* what) {
    const double scale = u.max_abs();
    if (!(scale > 0.0)) throw DomainError(std::string(what) + ": zero state is not in the open positive cone");
    const double floor = rel_floor * scale;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (!(u.values()[i] > floor)) {
            throw DomainError(std::string(what) + ": state is not in the open positive cone");
        }
    }
}

Field nodal_g(const Problem& p, const Field& u) {
    check_match(p, u, "nodal_g");
    Field out(u.components(), u.nodes());
    for (Eigen::Index x = 0; x < u.nodes(); ++x) {
        const Eigen::VectorXd gx = p.model().g(node_values(u, x));
        for (int c = 0; c < u.components(); ++c) out(c, x) = gx[c];
    }
    return out;
}

Field nodal_power(const Field& u, double e) {
    Field out(u.components(), u.nodes());
    out.values() = u.values().array().pow(e);
    return out;
}

double phi(const Problem& p, const Field& u, double lambda) {
    check_match(p, u, "phi");
    const Field a = abs_field(u);
    double sublinear = 0.0;
    double primitive = 0.0;
    const double q = p.q();
    for (Eigen::Index x = 0; x < u.nodes(); ++x) {
        const double w = p.grid().weights[x];
        const Eigen::VectorXd ux = node_values(a, x);
        for (int c = 0; c < u.components(); ++c) sublinear += w * std::pow(ux[c], q);
        primitive += w * p.model().primitive(ux);
    }
    return 0.5 * p.dirichlet_energy(u) - lambda / q * sublinear - primitive;
}

Field phi_grad(const Problem& p, const Field& u, double lambda) {
    check_match(p, u, "phi_grad");
    require_cone_interior(u, kEnergyConeFloor, "phi_grad");
    Field r(u.components(), p.laplacian().matrix * u.values());
    r.values() -= lambda * u.values().array().pow(p.q() - 1.0).matrix();
    r.values() -= nodal_g(p, u).values();
    return r;
}

LinearOperator hessian_operator(const Problem& p, const Field& u, double lambda) {
    check_match(p, u, "hessian_operator");
    require_cone_interior(u, kEnergyConeFloor, "hessian_operator");
    const Eigen::Index n = u.nodes();
    const int m = u.components();
    const double q = p.q();
    const SparseMatrix& lap = p.laplacian().matrix;

    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(lap.nonZeros() + n * m * m));
    for (int k = 0; k < lap.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(lap, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    }
    for (Eigen::Index x = 0; x < n; ++x) {
        const Eigen::VectorXd ux = node_values(u, x);
        const Eigen::MatrixXd jac = p.model().jacobian(ux);
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                double v = -jac(i, j);
                if (i == j) v -= lambda * (q - 1.0) * std::pow(ux[i], q - 2.0);
                if (v != 0.0) t.emplace_back(i * n + x, j * n + x, v);
            }
        }
    }
    LinearOperator op;
    op.matrix.resize(n * m, n * m);
    op.matrix.setFromTriplets(t.begin(), t.end());
    op.weights = p.weights();
    op.symmetric = true;
    return op;
}

double rayleigh_ext(const Problem& p, const Field& u, const Field& v) {
    check_match(p, u, "rayleigh_ext");
    check_match(p, v, "rayleigh_ext");
    require_cone_interior(u, kEnergyConeFloor, "rayleigh_ext");
    const double denom = p.dot(nodal_power(u, p.q() - 1.0), v);
    if (denom == 0.0 || !std::isfinite(denom)) {
        throw DomainError("rayleigh_ext: v is outside Sigma(u), <u^{q-1}, v> = 0");
    }
    const Vector num_field = p.laplacian().matrix * u.values() - nodal_g(p, u).values();
    return weighted_dot(p.weights(), num_field, v.values()) / denom;
}

Field rayleigh_ext_grad_v(const Problem& p, const Field& u, const Field& v) {
    const double r = rayleigh_ext(p, u, v);
    const Field upow = nodal_power(u, p.q() - 1.0);
    const double denom = p.dot(upow, v);
    Field out(u.components(), p.laplacian().matrix * u.values() - nodal_g(p, u).values() - r * upow.values());
    out.values() /= denom;
    return out;
}

double rayleigh_nl(const Problem& p, const Field& u) {
    check_match(p, u, "rayleigh_nl");
    const Field a = abs_field(u);
    const double denom = (p.weights().array() * a.values().array().pow(p.q())).sum();
    if (!(denom > 0.0)) throw DomainError("rayleigh_nl: zero state");
    return (p.dirichlet_energy(u) - p.dot(nodal_g(p, a), a)) / denom;
}

FiberMap::FiberMap(const Problem& p, const Field& v) : q_(p.q()) {
    check_match(p, v, "FiberMap");
    const Field a = abs_field(v);
    a_ = p.dirichlet_energy(v);
    c_ = (p.weights().array() * a.values().array().pow(q_)).sum();
    if (!(c_ > 0.0)) throw DomainError("FiberMap: zero direction");
    const auto& terms = p.model().terms();
    terms_.reserve(terms.size());
    for (const auto& term : terms) {
        double b = 0.0;
        for (Eigen::Index x = 0; x < v.nodes(); ++x) {
            double val = term.coefficient;
            for (int c = 0; c < v.components(); ++c) {
                const double e = term.exponents[static_cast<std::size_t>(c)];
                if (e != 0.0) val *= std::pow(a(c, x), e);
            }
            b += p.grid().weights[x] * val;
        }
        terms_.emplace_back(term.degree(), b);
    }
}

double FiberMap::value(double t) const {
    if (!(t > 0.0)) throw InvalidArgument("fiber: t must be positive");
    double num = a_ * std::pow(t, 2.0 - q_);
    for (const auto& [deg, b] : terms_) num -= deg * b * std::pow(t, deg - q_);
    return num / c_;
}

double FiberMap::derivative(double t) const {
    if (!(t > 0.0)) throw InvalidArgument("fiber: t must be positive");
    double num = (2.0 - q_) * a_ * std::pow(t, 1.0 - q_);
    for (const auto& [deg, b] : terms_) num -= deg * (deg - q_) * b * std::pow(t, deg - q_ - 1.0);
    return num / c_;
}

double FiberMap::argmax() const {
    // sign(dR/dt) = sign(slope(t)) with slope decreasing in t when every degree exceeds 2.
    auto slope = [&](double t) {
        double s = (2.0 - q_) * a_;
        for (const auto& [deg, b] : terms_) s -= deg * (deg - q_) * b * std::pow(t, deg - 2.0);
        return s;
    };
    double hi = 1.0;
    int guard = 0;
    while (slope(hi) > 0.0) {
        hi *= 2.0;
        if (++guard > 2000 || !std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    }
    double lo = hi / 2.0;
    guard = 0;
    while (slope(lo) <= 0.0) {
        lo /= 2.0;
        if (++guard > 2000 || lo == 0.0) return 0.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::pair<double, double> fiber(const Problem& p, const Field& v, double t) {
    const FiberMap map(p, v);
    return {map.value(t), map.derivative(t)};
}

EkelandTrace ekeland_diagnostic(const Problem& p, const Field& u, const Field& v0, int max_iterations,
                                double threshold) {
    EkelandTrace trace;
    Field v = v0;
    for (int it = 0; it <= max_iterations; ++it) {
        double value = 0.0;
        Field grad;
        try {
            value = rayleigh_ext(p, u, v);
            grad = rayleigh_ext_grad_v(p, u, v);
        } catch (const DomainError&) {
            break;  // reached the boundary of Sigma(u): the quotient is unbounded below
        }
        const double gnorm = p.norm(grad) * p.norm(v);  // scale-free: R is 0-homogeneous in v
        trace.values.push_back(value);
        trace.gradient_norms.push_back(gnorm);
        if (gnorm <= threshold) {
            trace.stationary = true;
            break;
        }
        // Armijo backtracking on R(u, .) along the negative gradient.
        const double slope = -p.dot(grad, grad);
        double step = p.norm(v) / p.norm(grad);
        bool accepted = false;
        for (int k = 0; k < 40; ++k) {
            Field trial(v.components(), v.values() - step * grad.values());
            try {
                if (rayleigh_ext(p, u, trial) <= value + 1e-4 * step * slope) {
                    v = std::move(trial);
                    accepted = true;
                    break;
                }
            } catch (const DomainError&) {
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    return trace;
}

}  // namespace foldfinder
