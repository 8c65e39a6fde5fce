#pragma once

#include "foldfinder/linalg.hpp"

#include <array>
#include <string>
#include <vector>

namespace foldfinder {

enum class GridKind { interval, rectangle };

/// Domain description: the interval (0, L) or the rectangle (0, Lx) x (0, Ly)
/// with a given number of interior nodes per axis.
struct DomainSpec {
    GridKind kind = GridKind::interval;
    std::vector<double> extents{1.0};
    std::vector<int> n_interior{1};
};

/// Uniform finite-difference grid over interior nodes only.
///
/// Nodes are ordered lexicographically with x fastest: node = ix + nx * iy.
/// Node (ix, iy) sits at ((ix + 1) hx, (iy + 1) hy). Homogeneous Dirichlet
/// values live on the boundary and are never stored.
struct Grid {
    GridKind kind = GridKind::interval;
    std::vector<double> extents;
    std::vector<int> n_interior;
    std::vector<double> h;
    Vector weights;  ///< h^d per interior node

    int dimension() const { return static_cast<int>(n_interior.size()); }
    Eigen::Index nodes() const { return weights.size(); }
    std::array<double, 2> coordinates(Eigen::Index node) const;

    /// Diagonal coefficient of the stencil, sum over axes of 2 / h^2.
    double stencil_scale() const;

    bool operator==(const Grid& other) const;
};

Grid build_grid(const DomainSpec& spec);
Grid make_interval(int n_interior, double length = 1.0);
Grid make_rectangle(int nx, int ny, double lx = 1.0, double ly = 1.0);

/// Parses "interval:N" or "rectangle:NXxNY" (unit extents unless
/// `extents` is given as "L" or "LXxLY").
DomainSpec parse_domain(const std::string& grid, const std::string& extents = "");
std::string describe(const Grid& grid);

/// An m-component grid function stored component-major: all nodes of
/// component 0, then all nodes of component 1, ...
class Field {
public:
    Field() = default;
    Field(int components, Eigen::Index nodes);
    Field(int components, Vector values);

    static Field constant(int components, Eigen::Index nodes, double value);

    int components() const { return components_; }
    Eigen::Index nodes() const { return nodes_; }
    Eigen::Index size() const { return values_.size(); }

    Vector& values() { return values_; }
    const Vector& values() const { return values_; }

    auto component(int i) { return values_.segment(i * nodes_, nodes_); }
    auto component(int i) const { return values_.segment(i * nodes_, nodes_); }

    double& operator()(int comp, Eigen::Index node) { return values_[comp * nodes_ + node]; }
    double operator()(int comp, Eigen::Index node) const { return values_[comp * nodes_ + node]; }

    double max_abs() const { return values_.size() ? values_.cwiseAbs().maxCoeff() : 0.0; }

private:
    int components_ = 0;
    Eigen::Index nodes_ = 0;
    Vector values_;
};

using ScalarField = Field;

/// Quadrature weights repeated for each component of an m-component field.
Vector field_weights(const Grid& grid, int components);

/// -Delta_h on one component, second-order central stencil.
SparseMatrix laplacian_matrix(const Grid& grid);

/// -Delta_h applied componentwise, as a LinearOperator on m-component fields.
LinearOperator laplacian_operator(const Grid& grid, int components = 1);

/// Returns -Delta_h f (componentwise).
Field apply_laplacian(const Grid& grid, const Field& f);

/// sum over components and nodes of weight * f1 * f2.
double inner_product(const Grid& grid, const Field& f1, const Field& f2);

/// Smallest eigenvalue of -Delta_h restricted to the nodes selected by
/// `mask` (Dirichlet on everything outside the mask).
double principal_laplacian_eigenvalue(const Grid& grid, const std::vector<bool>& mask);
double principal_laplacian_eigenvalue(const Grid& grid);

}  // namespace foldfinder
