#include "foldfinder/mesh.hpp"

#include "foldfinder/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace foldfinder {

namespace {

void check_field(const Grid& grid, const Field& f, const char* what) {
    if (f.nodes() != grid.nodes() || f.size() != f.components() * grid.nodes()) {
        throw InvalidArgument(std::string(what) + ": field does not match grid");
    }
}

template <typename T>
T parse_number(const std::string& text, const std::string& context) {
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw InvalidArgument("cannot parse '" + text + "' in " + context);
    }
    return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) parts.push_back(item);
    return parts;
}

}  // namespace

std::array<double, 2> Grid::coordinates(Eigen::Index node) const {
    const int nx = n_interior[0];
    const Eigen::Index ix = node % nx;
    const Eigen::Index iy = node / nx;
    std::array<double, 2> x{static_cast<double>(ix + 1) * h[0], 0.0};
    if (dimension() == 2) x[1] = static_cast<double>(iy + 1) * h[1];
    return x;
}

double Grid::stencil_scale() const {
    double s = 0.0;
    for (double hi : h) s += 2.0 / (hi * hi);
    return s;
}

bool Grid::operator==(const Grid& other) const {
    return kind == other.kind && extents == other.extents && n_interior == other.n_interior;
}

Grid build_grid(const DomainSpec& spec) {
    const std::size_t dim = spec.kind == GridKind::interval ? 1 : 2;
    if (spec.extents.size() != dim || spec.n_interior.size() != dim) {
        throw InvalidArgument("build_grid: expected " + std::to_string(dim) + " extents and node counts");
    }
    Grid g;
    g.kind = spec.kind;
    g.extents = spec.extents;
    g.n_interior = spec.n_interior;
    double cell = 1.0;
    Eigen::Index total = 1;
    for (std::size_t a = 0; a < dim; ++a) {
        if (!(spec.extents[a] > 0.0) || !std::isfinite(spec.extents[a])) {
            throw InvalidArgument("build_grid: extents must be positive");
        }
        if (spec.n_interior[a] < 1) throw InvalidArgument("build_grid: need at least one interior node per axis");
        g.h.push_back(spec.extents[a] / (spec.n_interior[a] + 1));
        cell *= g.h.back();
        total *= spec.n_interior[a];
    }
    g.weights = Vector::Constant(total, cell);
    return g;
}

Grid make_interval(int n_interior, double length) {
    return build_grid({GridKind::interval, {length}, {n_interior}});
}

Grid make_rectangle(int nx, int ny, double lx, double ly) {
    return build_grid({GridKind::rectangle, {lx, ly}, {nx, ny}});
}

DomainSpec parse_domain(const std::string& grid, const std::string& extents) {
    const auto colon = grid.find(':');
    if (colon == std::string::npos) throw InvalidArgument("grid must look like interval:N or rectangle:NXxNY");
    const std::string kind = grid.substr(0, colon);
    const auto counts = split(grid.substr(colon + 1), 'x');
    DomainSpec spec;
    if (kind == "interval") {
        spec.kind = GridKind::interval;
        if (counts.size() != 1) throw InvalidArgument("interval grid takes one node count");
    } else if (kind == "rectangle") {
        spec.kind = GridKind::rectangle;
        if (counts.size() != 2) throw InvalidArgument("rectangle grid takes NXxNY");
    } else {
        throw InvalidArgument("unknown grid kind '" + kind + "'");
    }
    spec.n_interior.clear();
    for (const auto& c : counts) spec.n_interior.push_back(parse_number<int>(c, "grid"));
    spec.extents.assign(counts.size(), 1.0);
    if (!extents.empty()) {
        const auto ls = split(extents, 'x');
        if (ls.size() != counts.size()) throw InvalidArgument("extent count does not match grid dimension");
        for (std::size_t a = 0; a < ls.size(); ++a) spec.extents[a] = parse_number<double>(ls[a], "extents");
    }
    return spec;
}

std::string describe(const Grid& grid) {
    std::ostringstream out;
    out << (grid.kind == GridKind::interval ? "interval:" : "rectangle:") << grid.n_interior[0];
    if (grid.dimension() == 2) out << 'x' << grid.n_interior[1];
    return out.str();
}

Field::Field(int components, Eigen::Index nodes)
    : components_(components), nodes_(nodes), values_(Vector::Zero(components * nodes)) {}

Field::Field(int components, Vector values)
    : components_(components), nodes_(components > 0 ? values.size() / components : 0), values_(std::move(values)) {
    if (components <= 0 || values_.size() % components != 0) {
        throw InvalidArgument("Field: value count is not a multiple of the component count");
    }
}

Field Field::constant(int components, Eigen::Index nodes, double value) {
    return Field(components, Vector::Constant(components * nodes, value));
}

Vector field_weights(const Grid& grid, int components) {
    return grid.weights.replicate(components, 1);
}

SparseMatrix laplacian_matrix(const Grid& grid) {
    const Eigen::Index n = grid.nodes();
    const int nx = grid.n_interior[0];
    const int ny = grid.dimension() == 2 ? grid.n_interior[1] : 1;
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(n) * (1 + 2 * grid.dimension()));
    const double cx = 1.0 / (grid.h[0] * grid.h[0]);
    const double cy = grid.dimension() == 2 ? 1.0 / (grid.h[1] * grid.h[1]) : 0.0;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            const Eigen::Index k = ix + static_cast<Eigen::Index>(nx) * iy;
            t.emplace_back(k, k, grid.stencil_scale());
            if (ix > 0) t.emplace_back(k, k - 1, -cx);
            if (ix + 1 < nx) t.emplace_back(k, k + 1, -cx);
            if (grid.dimension() == 2) {
                if (iy > 0) t.emplace_back(k, k - nx, -cy);
                if (iy + 1 < ny) t.emplace_back(k, k + nx, -cy);
            }
        }
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

LinearOperator laplacian_operator(const Grid& grid, int components) {
    const SparseMatrix block = laplacian_matrix(grid);
    const Eigen::Index n = grid.nodes();
    std::vector<Triplet> t;
    t.reserve(static_cast<std::size_t>(block.nonZeros() * components));
    for (int c = 0; c < components; ++c) {
        for (int k = 0; k < block.outerSize(); ++k) {
            for (SparseMatrix::InnerIterator it(block, k); it; ++it) {
                t.emplace_back(it.row() + c * n, it.col() + c * n, it.value());
            }
        }
    }
    LinearOperator op;
    op.matrix.resize(n * components, n * components);
    op.matrix.setFromTriplets(t.begin(), t.end());
    op.weights = field_weights(grid, components);
    op.symmetric = true;
    return op;
}

Field apply_laplacian(const Grid& grid, const Field& f) {
    check_field(grid, f, "apply_laplacian");
    const SparseMatrix lap = laplacian_matrix(grid);
    Field out(f.components(), grid.nodes());
    for (int c = 0; c < f.components(); ++c) out.component(c) = lap * f.component(c);
    return out;
}

double inner_product(const Grid& grid, const Field& f1, const Field& f2) {
    check_field(grid, f1, "inner_product");
    check_field(grid, f2, "inner_product");
    if (f1.components() != f2.components()) throw InvalidArgument("inner_product: component count mismatch");
    return weighted_dot(field_weights(grid, f1.components()), f1.values(), f2.values());
}

double principal_laplacian_eigenvalue(const Grid& grid, const std::vector<bool>& mask) {
    if (static_cast<Eigen::Index>(mask.size()) != grid.nodes()) {
        throw InvalidArgument("principal_laplacian_eigenvalue: mask size does not match grid");
    }
    std::vector<Eigen::Index> index(mask.size(), -1);
    Eigen::Index count = 0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) index[k] = count++;
    }
    if (count == 0) throw InvalidArgument("principal_laplacian_eigenvalue: empty mask");

    const SparseMatrix full = laplacian_matrix(grid);
    std::vector<Triplet> t;
    for (int k = 0; k < full.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(full, k); it; ++it) {
            const auto r = index[static_cast<std::size_t>(it.row())];
            const auto c = index[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
        }
    }
    LinearOperator op;
    op.matrix.resize(count, count);
    op.matrix.setFromTriplets(t.begin(), t.end());
    op.weights = Vector::Constant(count, grid.weights[0]);
    return smallest_eigenpair(op, 1e-9 * grid.stencil_scale()).value;
}

double principal_laplacian_eigenvalue(const Grid& grid) {
    return principal_laplacian_eigenvalue(grid, std::vector<bool>(static_cast<std::size_t>(grid.nodes()), true));
}

}  // namespace foldfinder
