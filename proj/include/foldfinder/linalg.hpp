#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cstdint>
#include <memory>

namespace foldfinder {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Weighted (quadrature) inner product over a flat degree-of-freedom vector.
double weighted_dot(const Vector& weights, const Vector& a, const Vector& b);
double weighted_norm(const Vector& weights, const Vector& a);

/// A linear operator on grid fields in the quadrature pairing.
///
/// The operator is stored assembled: `matrix` maps nodal values to nodal
/// values (strong form), and `weights` carries the quadrature weight of each
/// degree of freedom so that norms and inner products are the discrete
/// analogues of the L2 ones. For all operators built by this library the
/// weights are uniform, so "symmetric in the quadrature pairing" and
/// "symmetric matrix" coincide.
struct LinearOperator {
    SparseMatrix matrix;
    Vector weights;
    bool symmetric = true;

    Eigen::Index dimension() const { return matrix.rows(); }
    Vector apply(const Vector& x) const;

    /// Largest absolute diagonal entry; the natural unit for tolerances.
    double scale() const;

    static LinearOperator identity(const Vector& weights);
    static LinearOperator diagonal(const Vector& diag, const Vector& weights);
};

/// Number of linear solves (factorizations count once per solve) performed
/// by the calling thread since the last reset.
std::int64_t linear_solve_count();
void reset_linear_solve_count();

/// Jacobi-preconditioned conjugate gradients.
///
/// Returns x with ||Ax - b||_W <= tol ||b||_W. Throws IndefiniteOperator on a
/// non-positive curvature direction and ConvergenceError after 10 N
/// iterations.
Vector solve_spd(const LinearOperator& A, const Vector& b, double tol);

/// Sparse LU solve for general (possibly indefinite) operators.
Vector solve_general(const LinearOperator& A, const Vector& b);

/// Reusable sparse Cholesky factorization of an SPD operator.
class CholeskySolver {
public:
    /// Throws IndefiniteOperator if the factorization fails.
    explicit CholeskySolver(const LinearOperator& A);

    Vector solve(const Vector& b) const;

private:
    std::shared_ptr<Eigen::SimplicialLLT<SparseMatrix>> llt_;
};

struct BorderedSolution {
    Vector x;
    double y = 0.0;
};

/// Solves [[A, c], [b^T, d]] [x; y] = [rhs_x; rhs_y].
///
/// The bordered matrix is assembled and factored directly, so A itself may
/// be singular as long as the bordered matrix is not. Throws SingularSystem
/// (with a condition estimate) if the relative residual cannot be brought
/// below 1e-10.
BorderedSolution solve_bordered(const LinearOperator& A, const Vector& c, const Vector& b, double d,
                                const Vector& rhs_x, double rhs_y);

struct Eigenpair {
    double value = 0.0;
    Vector vector;          ///< quadrature-normalized, largest-magnitude entry positive
    double residual = 0.0;  ///< ||A v - value v||_W
    int iterations = 0;
};

/// Smallest eigenpair of a symmetric operator by shifted inverse iteration.
///
/// The shift starts at a Gershgorin lower bound and is moved up to
/// (Rayleigh quotient - residual margin) whenever a Cholesky factorization
/// of the shifted operator certifies it is still below the spectrum.
/// At most 200 iterations.
Eigenpair smallest_eigenpair(const LinearOperator& A, double tol);

}  // namespace foldfinder
