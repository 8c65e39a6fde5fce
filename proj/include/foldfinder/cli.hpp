#pragma once

#include "foldfinder/model.hpp"
#include "foldfinder/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace foldfinder {

enum ExitCode : int {
    kExitOk = 0,
    kExitNoConvergence = 2,
    kExitInvalidModel = 3,
    kExitUsage = 64,
};

/// Everything a subcommand needs. Populated from flags and an optional
/// `key = value` file; flags take precedence.
struct RunConfig {
    std::string model = "abc";  ///< abc | coupled | sublinear | terms
    double q = 1.5;
    double gamma = 4.0;
    std::string terms;  ///< "c:p1,..,pm;..." for model = terms
    int components = 1;
    std::string grid = "interval:127";
    std::string extent;

    std::optional<double> lambda;
    double lambda_start = 1.0;
    std::optional<double> lambda_end;
    double step = 0.5;
    int max_records = 400;

    double tol = 1e-10;
    double fold_tol = 1e-8;
    std::uint64_t seed = 1;
    int restarts = 0;
    std::string method = "direct";  ///< fold: direct | continuation
    std::string sizes = "31,63,127,255";

    std::string output;
    std::string init;
};

ModelSpec build_model(const RunConfig& cfg);
Grid build_grid(const RunConfig& cfg);

/// Worker count: hardware concurrency, capped by FOLDFINDER_THREADS when set.
int worker_threads();

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_fold(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_continue(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv (subcommand first or after global flags) and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace foldfinder
