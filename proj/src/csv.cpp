#include "foldfinder/csv.hpp"

#include "foldfinder/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace foldfinder {

namespace {

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    return cells;
}

double parse_cell(const std::string& cell) {
    double v{};
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw InvalidArgument("csv: cannot parse number '" + cell + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, ptr);
}

namespace {

void write_fields(std::ostream& out, const Grid& grid, const std::vector<std::pair<const Field*, std::string>>& fields) {
    for (const auto& [f, prefix] : fields) {
        if (f->nodes() != grid.nodes()) throw InvalidArgument("csv: field does not match grid");
    }
    out << 'x';
    if (grid.dimension() == 2) out << ",y";
    for (const auto& [f, prefix] : fields) {
        for (int c = 0; c < f->components(); ++c) out << ',' << prefix << '_' << (c + 1);
    }
    out << '\n';
    for (Eigen::Index x = 0; x < grid.nodes(); ++x) {
        const auto xy = grid.coordinates(x);
        out << format_double(xy[0]);
        if (grid.dimension() == 2) out << ',' << format_double(xy[1]);
        for (const auto& [f, prefix] : fields) {
            for (int c = 0; c < f->components(); ++c) out << ',' << format_double((*f)(c, x));
        }
        out << '\n';
    }
}

}  // namespace

void write_solution_csv(std::ostream& out, const Grid& grid, const Field& u, const std::string& prefix) {
    write_fields(out, grid, {{&u, prefix}});
}

void write_fold_csv(std::ostream& out, const Grid& grid, const Field& u, const Field& v) {
    write_fields(out, grid, {{&u, "u"}, {&v, "v"}});
}

void write_fold_csv(const std::string& path, const Grid& grid, const Field& u, const Field& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_fold_csv(out, grid, u, v);
}

void write_solution_csv(const std::string& path, const Grid& grid, const Field& u, const std::string& prefix) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_solution_csv(out, grid, u, prefix);
}

Field read_solution_csv(const std::string& path, const Grid& grid, const std::string& prefix) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("csv: empty file '" + path + "'");
    const auto header = split_row(line);
    std::vector<std::size_t> value_cols;
    for (std::size_t k = 0; k < header.size(); ++k) {
        if (header[k].rfind(prefix + "_", 0) == 0) value_cols.push_back(k);
    }
    if (value_cols.empty()) throw InvalidArgument("csv: no '" + prefix + "_k' columns in '" + path + "'");
    const int m = static_cast<int>(value_cols.size());
    Field u(m, grid.nodes());
    Eigen::Index node = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (node >= grid.nodes()) throw InvalidArgument("csv: more rows than grid nodes");
        const auto cells = split_row(line);
        if (cells.size() != header.size()) throw InvalidArgument("csv: ragged row");
        const auto xy = grid.coordinates(node);
        for (int a = 0; a < grid.dimension(); ++a) {
            const double coord = parse_cell(cells[static_cast<std::size_t>(a)]);
            if (std::abs(coord - xy[static_cast<std::size_t>(a)]) > 1e-12 * grid.extents[static_cast<std::size_t>(a)]) {
                throw InvalidArgument("csv: node coordinates do not match the grid");
            }
        }
        for (int c = 0; c < m; ++c) u(c, node) = parse_cell(cells[value_cols[static_cast<std::size_t>(c)]]);
        ++node;
    }
    if (node != grid.nodes()) throw InvalidArgument("csv: fewer rows than grid nodes");
    return u;
}

void write_branch_csv(std::ostream& out, const Branch& branch) {
    out << "lambda,sup_norm,energy,delta,corrector_iters\n";
    for (const auto& r : branch.records) {
        out << format_double(r.lambda) << ',' << format_double(r.sup_norm) << ',' << format_double(r.energy) << ','
            << format_double(r.delta) << ',' << r.corrector_iterations << '\n';
    }
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "method,grid_n,lambda_star,wall_seconds,linear_solves\n";
    for (const auto& r : rows) {
        out << r.method << ',' << r.grid_n << ',' << format_double(r.lambda_star) << ','
            << format_double(r.wall_seconds) << ',' << r.linear_solves << '\n';
    }
}

}  // namespace foldfinder
