#include "foldfinder/linalg.hpp"

#include "foldfinder/error.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace foldfinder {

namespace {

thread_local std::int64_t solve_counter = 0;

void check_dims(const LinearOperator& A, const Vector& v, const char* what) {
    if (v.size() != A.dimension() || A.weights.size() != A.dimension()) {
        throw InvalidArgument(std::string(what) + ": dimension mismatch");
    }
}

SparseMatrix shifted(const SparseMatrix& m, double sigma) {
    SparseMatrix id(m.rows(), m.cols());
    id.setIdentity();
    return m - sigma * id;
}

double gershgorin_lower_bound(const SparseMatrix& m) {
    Vector diag = Vector::Zero(m.rows());
    Vector off = Vector::Zero(m.rows());
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
            if (it.row() == it.col()) {
                diag[it.row()] += it.value();
            } else {
                off[it.row()] += std::abs(it.value());
            }
        }
    }
    return (diag - off).minCoeff();
}

// Deterministic start vector: positive with a small fixed perturbation so it
// is not orthogonal to a non-positive principal mode.
Vector start_vector(Eigen::Index n) {
    Vector x(n);
    std::uint64_t state = 0x9E3779B97F4A7C15ULL;
    for (Eigen::Index i = 0; i < n; ++i) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        const double r = static_cast<double>(state >> 11) * 0x1.0p-53;
        x[i] = 1.0 + 0.05 * (r - 0.5);
    }
    return x;
}

}  // namespace

double weighted_dot(const Vector& weights, const Vector& a, const Vector& b) {
    return (weights.array() * a.array() * b.array()).sum();
}

double weighted_norm(const Vector& weights, const Vector& a) {
    return std::sqrt(weighted_dot(weights, a, a));
}

Vector LinearOperator::apply(const Vector& x) const {
    if (x.size() != dimension()) {
        throw InvalidArgument("LinearOperator::apply: dimension mismatch");
    }
    return matrix * x;
}

double LinearOperator::scale() const {
    double s = 0.0;
    for (int k = 0; k < matrix.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) {
            if (it.row() == it.col()) s = std::max(s, std::abs(it.value()));
        }
    }
    return s;
}

LinearOperator LinearOperator::identity(const Vector& weights) {
    return diagonal(Vector::Ones(weights.size()), weights);
}

LinearOperator LinearOperator::diagonal(const Vector& diag, const Vector& weights) {
    LinearOperator op;
    op.matrix.resize(diag.size(), diag.size());
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(diag.size()));
    for (Eigen::Index i = 0; i < diag.size(); ++i) t.emplace_back(i, i, diag[i]);
    op.matrix.setFromTriplets(t.begin(), t.end());
    op.weights = weights;
    op.symmetric = true;
    return op;
}

std::int64_t linear_solve_count() { return solve_counter; }
void reset_linear_solve_count() { solve_counter = 0; }

Vector solve_spd(const LinearOperator& A, const Vector& b, double tol) {
    check_dims(A, b, "solve_spd");
    if (!(tol > 0.0)) throw InvalidArgument("solve_spd: tol must be positive");
    ++solve_counter;

    const Eigen::Index n = A.dimension();
    const Vector& w = A.weights;
    const double bnorm = weighted_norm(w, b);
    Vector x = Vector::Zero(n);
    if (bnorm == 0.0) return x;

    Vector inv_diag = A.matrix.diagonal();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(inv_diag[i] > 0.0)) {
            throw IndefiniteOperator("solve_spd: non-positive diagonal entry");
        }
        inv_diag[i] = 1.0 / inv_diag[i];
    }

    Vector r = b;
    Vector z = inv_diag.cwiseProduct(r);
    Vector p = z;
    double rz = weighted_dot(w, r, z);
    const long cap = 10 * static_cast<long>(n);
    double rnorm = bnorm;
    for (long it = 0; it < cap; ++it) {
        const Vector ap = A.matrix * p;
        const double curvature = weighted_dot(w, p, ap);
        if (!(curvature > 0.0)) {
            throw IndefiniteOperator("solve_spd: negative curvature direction encountered");
        }
        const double alpha = rz / curvature;
        x += alpha * p;
        r -= alpha * ap;
        rnorm = weighted_norm(w, r);
        if (rnorm <= tol * bnorm) return x;
        z = inv_diag.cwiseProduct(r);
        const double rz_next = weighted_dot(w, r, z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    // Recompute the true residual: the recurrence may drift below the attainable floor.
    rnorm = weighted_norm(w, b - A.matrix * x);
    if (rnorm <= tol * bnorm) return x;
    throw ConvergenceError("solve_spd: iteration cap reached", rnorm / bnorm, static_cast<int>(cap));
}

Vector solve_general(const LinearOperator& A, const Vector& b) {
    check_dims(A, b, "solve_general");
    ++solve_counter;
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    SparseMatrix m = A.matrix;
    m.makeCompressed();
    lu.compute(m);
    if (lu.info() != Eigen::Success) {
        throw SingularSystem("solve_general: LU factorization failed", std::numeric_limits<double>::infinity());
    }
    Vector x = lu.solve(b);
    if (!x.allFinite()) {
        throw SingularSystem("solve_general: non-finite solution", std::numeric_limits<double>::infinity());
    }
    return x;
}

CholeskySolver::CholeskySolver(const LinearOperator& A)
    : llt_(std::make_shared<Eigen::SimplicialLLT<SparseMatrix>>()) {
    llt_->compute(A.matrix);
    if (llt_->info() != Eigen::Success) {
        throw IndefiniteOperator("CholeskySolver: operator is not positive definite");
    }
}

Vector CholeskySolver::solve(const Vector& b) const {
    ++solve_counter;
    return llt_->solve(b);
}

BorderedSolution solve_bordered(const LinearOperator& A, const Vector& c, const Vector& b, double d,
                                const Vector& rhs_x, double rhs_y) {
    check_dims(A, c, "solve_bordered");
    check_dims(A, b, "solve_bordered");
    check_dims(A, rhs_x, "solve_bordered");
    ++solve_counter;

    const Eigen::Index n = A.dimension();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(A.matrix.nonZeros() + 2 * n + 1));
    for (int k = 0; k < A.matrix.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A.matrix, k); it; ++it) {
            t.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (c[i] != 0.0) t.emplace_back(i, n, c[i]);
        if (b[i] != 0.0) t.emplace_back(n, i, b[i]);
    }
    if (d != 0.0) t.emplace_back(n, n, d);
    SparseMatrix m(n + 1, n + 1);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();

    Vector rhs(n + 1);
    rhs.head(n) = rhs_x;
    rhs[n] = rhs_y;

    double mnorm = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(m, k); it; ++it) mnorm = std::max(mnorm, std::abs(it.value()));
    }

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) {
        throw SingularSystem("solve_bordered: bordered matrix is singular", std::numeric_limits<double>::infinity());
    }
    Vector sol = lu.solve(rhs);
    const double rhs_norm = rhs.lpNorm<Eigen::Infinity>();
    auto relative_residual = [&](const Vector& s) {
        const double scale = std::max(rhs_norm, mnorm * s.lpNorm<Eigen::Infinity>());
        return scale == 0.0 ? 0.0 : (rhs - m * s).lpNorm<Eigen::Infinity>() / scale;
    };
    double res = relative_residual(sol);
    if (sol.allFinite() && res > 1e-10) {
        sol += lu.solve(Vector(rhs - m * sol));
        res = relative_residual(sol);
    }
    const double cond_est =
        rhs_norm > 0.0 ? mnorm * sol.lpNorm<Eigen::Infinity>() / rhs_norm : std::numeric_limits<double>::quiet_NaN();
    if (!sol.allFinite() || res > 1e-10 || cond_est > 1e15) {
        throw SingularSystem("solve_bordered: bordered matrix is numerically singular", cond_est);
    }
    return {sol.head(n), sol[n]};
}

Eigenpair smallest_eigenpair(const LinearOperator& A, double tol) {
    if (!A.symmetric) throw InvalidArgument("smallest_eigenpair: operator must be symmetric");
    if (!(tol > 0.0)) throw InvalidArgument("smallest_eigenpair: tol must be positive");
    const Eigen::Index n = A.dimension();
    if (n == 0 || A.weights.size() != n) throw InvalidArgument("smallest_eigenpair: empty or mismatched operator");

    const Vector& w = A.weights;
    const double scale = std::max(A.scale(), tol);
    const double floor = 100.0 * std::numeric_limits<double>::epsilon() * scale;

    double sigma = gershgorin_lower_bound(A.matrix) - 1e-3 * scale;
    auto factor = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(shifted(A.matrix, sigma));
    if (factor->info() != Eigen::Success) {
        // Gershgorin bound minus a margin is below the spectrum; failure here is numerical.
        sigma -= scale;
        factor = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(shifted(A.matrix, sigma));
        if (factor->info() != Eigen::Success) {
            throw ConvergenceError("smallest_eigenpair: could not factor shifted operator", 0.0, 0);
        }
    }

    Vector x = start_vector(n);
    x /= weighted_norm(w, x);
    Eigenpair out;
    double best_res = std::numeric_limits<double>::infinity();
    int stagnant = 0;
    constexpr int kMaxIterations = 200;
    for (int it = 1; it <= kMaxIterations; ++it) {
        ++solve_counter;
        x = factor->solve(x);
        x /= weighted_norm(w, x);
        const Vector ax = A.matrix * x;
        const double rho = weighted_dot(w, x, ax);
        const double res = weighted_norm(w, ax - rho * x);
        out.value = rho;
        out.residual = res;
        out.iterations = it;
        if (!std::isfinite(rho) || !std::isfinite(res)) {
            throw ConvergenceError("smallest_eigenpair: non-finite iterate", res, it);
        }
        if (res <= tol || res <= floor) break;
        if (res < 0.5 * best_res) {
            best_res = res;
            stagnant = 0;
        } else if (++stagnant >= 20 && res <= 1e3 * floor) {
            break;  // roundoff-limited
        }
        const double candidate = rho - std::max(4.0 * res, 1e-12 * scale);
        if (candidate > sigma) {
            auto trial = std::make_unique<Eigen::SimplicialLLT<SparseMatrix>>(shifted(A.matrix, candidate));
            if (trial->info() == Eigen::Success) {
                sigma = candidate;
                factor = std::move(trial);
            }
        }
        if (it == kMaxIterations) {
            throw ConvergenceError("smallest_eigenpair: iteration cap reached", res, it);
        }
    }

    Eigen::Index imax = 0;
    x.cwiseAbs().maxCoeff(&imax);
    if (x[imax] < 0.0) x = -x;
    out.vector = std::move(x);
    return out;
}

}  // namespace foldfinder
