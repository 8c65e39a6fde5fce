#pragma once

#include "foldfinder/linalg.hpp"
#include "foldfinder/mesh.hpp"
#include "foldfinder/model.hpp"

#include <utility>
#include <vector>

namespace foldfinder {

/// A model posed on a grid. Immutable; caches the m-component Laplacian.
class Problem {
public:
    Problem(Grid grid, ModelSpec model);

    const Grid& grid() const { return grid_; }
    const ModelSpec& model() const { return model_; }
    int components() const { return model_.components(); }
    double q() const { return model_.q(); }

    /// -Delta_h acting on m-component fields.
    const LinearOperator& laplacian() const { return laplacian_; }
    const Vector& weights() const { return laplacian_.weights; }

    Field zero_field() const { return Field(components(), grid_.nodes()); }
    Field constant_field(double value) const { return Field::constant(components(), grid_.nodes(), value); }

    double dot(const Field& a, const Field& b) const;
    double norm(const Field& a) const;
    /// ||grad a||^2 = <-Delta_h a, a>.
    double dirichlet_energy(const Field& a) const;

private:
    Grid grid_;
    ModelSpec model_;
    LinearOperator laplacian_;
};

/// Relative cone floor for operations needing strictly positive nodes.
inline constexpr double kEnergyConeFloor = 1e-14;

/// Throws DomainError unless every node exceeds rel_floor * ||u||_inf (and u != 0).
void require_cone_interior(const Field& u, double rel_floor, const char* what);

/// Nodal g(u) (nonnegative cone only).
Field nodal_g(const Problem& p, const Field& u);
/// Nodal u_i^e, requires u > 0 when e < 0.
Field nodal_power(const Field& u, double e);

/// Energy 1/2 ||grad u||^2 - (lambda/q) sum |u_i|^q - sum G(|u|).
/// G is evaluated on |u|, which makes phi even in u.
double phi(const Problem& p, const Field& u, double lambda);

/// Strong residual -Delta_h u - lambda u^{q-1} - g(u); its quadrature pairing
/// with xi is the directional derivative of phi.
Field phi_grad(const Problem& p, const Field& u, double lambda);

/// Second derivative of phi: -Delta_h phi - Dg(u) phi - lambda (q-1) u^{q-2} phi.
LinearOperator hessian_operator(const Problem& p, const Field& u, double lambda);

/// (<-Delta_h u, v> - <g(u), v>) / <u^{q-1}, v>.
double rayleigh_ext(const Problem& p, const Field& u, const Field& v);

/// Riesz representer (quadrature pairing) of the v-derivative of rayleigh_ext.
Field rayleigh_ext_grad_v(const Problem& p, const Field& u, const Field& v);

/// (||grad u||^2 - <g(u), u>) / sum |u_i|^q.
double rayleigh_nl(const Problem& p, const Field& u);

/// t -> R(t v) along a fixed nonnegative direction, in closed monomial form:
///   R(t v) = [A t^{2-q} - sum_k deg_k B_k t^{deg_k - q}] / C
/// with A = ||grad v||^2, B_k = integral of term_k(v), C = sum |v_i|^q.
class FiberMap {
public:
    FiberMap(const Problem& p, const Field& v);

    double value(double t) const;
    double derivative(double t) const;

    /// Location of the unique fiber maximum, +infinity if R(t v) increases forever.
    double argmax() const;

private:
    double q_;
    double a_;
    double c_;
    std::vector<std::pair<double, double>> terms_;  ///< (degree, B)
};

/// (R(t v), d/dt R(t v)). Throws InvalidArgument for t <= 0.
std::pair<double, double> fiber(const Problem& p, const Field& v, double t);

/// Outcome of minimizing v -> R(u, v) by gradient descent at fixed u.
struct EkelandTrace {
    std::vector<double> gradient_norms;
    std::vector<double> values;
    bool stationary = false;  ///< gradient fell below the threshold: u behaves as a solution
};

/// Descent on v -> R(u, v) from v0 at fixed u. If u is a discrete solution
/// the v-gradient vanishes immediately; otherwise the quotient is unbounded
/// below and the run flags u as a non-solution.
EkelandTrace ekeland_diagnostic(const Problem& p, const Field& u, const Field& v0, int max_iterations = 50,
                                double threshold = 1e-8);

}  // namespace foldfinder
