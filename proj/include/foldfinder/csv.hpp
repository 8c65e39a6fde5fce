#pragma once

#include "foldfinder/fold.hpp"
#include "foldfinder/mesh.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace foldfinder {

/// Shortest-round-trip-safe decimal with 17 significant digits, '.' decimal
/// point regardless of locale.
std::string format_double(double x);

/// Header "x[,y],u_1,...,u_m"; one row per interior node in grid order.
void write_solution_csv(std::ostream& out, const Grid& grid, const Field& u, const std::string& prefix = "u");
void write_solution_csv(const std::string& path, const Grid& grid, const Field& u, const std::string& prefix = "u");

/// Header "x[,y],u_1,...,u_m,v_1,...,v_m": fold state and null direction.
void write_fold_csv(std::ostream& out, const Grid& grid, const Field& u, const Field& v);
void write_fold_csv(const std::string& path, const Grid& grid, const Field& u, const Field& v);

/// Reads a file written by write_solution_csv back into a field on `grid`.
/// Only columns named <prefix>_k are read; coordinates are checked against the grid.
Field read_solution_csv(const std::string& path, const Grid& grid, const std::string& prefix = "u");

/// Columns: lambda,sup_norm,energy,delta,corrector_iters
void write_branch_csv(std::ostream& out, const Branch& branch);

struct BenchRow {
    std::string method;
    int grid_n = 0;
    double lambda_star = 0.0;
    double wall_seconds = 0.0;
    long long linear_solves = 0;
};

/// Columns: method,grid_n,lambda_star,wall_seconds,linear_solves
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace foldfinder
