#include "foldfinder/cli.hpp"

#include "foldfinder/csv.hpp"
#include "foldfinder/cw.hpp"
#include "foldfinder/error.hpp"
#include "foldfinder/fold.hpp"
#include "foldfinder/nehari.hpp"
#include "foldfinder/spectrum.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

namespace foldfinder {

namespace {

std::string fmt(double x) { return format_double(x); }

class UsageError : public Error {
public:
    using Error::Error;
};

void require_usage(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

void check_tolerances(const RunConfig& cfg) {
    require_usage(cfg.tol > 0.0, "--tol must be positive");
    require_usage(cfg.fold_tol > 0.0, "--fold-tol must be positive");
}

// Returns false (after printing the report) when the model cannot be solved.
bool model_is_solvable(const ModelSpec& spec, std::ostream& err, bool warn_g4) {
    const HypothesisReport report = validate_hypotheses(spec);
    if (!report.solvable()) {
        err << "invalid model '" << spec.name() << "'\n" << report.to_string();
        return false;
    }
    if (warn_g4 && report.g4.status == CheckStatus::fail) {
        err << "warning: (g4) fails (" << report.g4.witness << "); a finite fold is not guaranteed\n";
    }
    return true;
}

template <class Writer>
void write_to(const std::string& path, std::ostream& fallback, Writer&& write) {
    if (path.empty() || path == "-") {
        write(fallback);
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open '" + path + "' for writing");
    write(file);
}

std::vector<int> parse_sizes(const std::string& text) {
    std::vector<int> sizes;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        int n = 0;
        try {
            n = std::stoi(item, &used);
        } catch (const std::exception&) {
            throw UsageError("--sizes: '" + item + "' is not an integer");
        }
        require_usage(used == item.size() && n >= 1, "--sizes: '" + item + "' is not a positive integer");
        sizes.push_back(n);
    }
    require_usage(!sizes.empty(), "--sizes: empty list");
    return sizes;
}

FoldPoint direct_fold(const Problem& p, const RunConfig& cfg, const Field& init, int* ascent_iterations) {
    const CwAscentResult ascent = cw_ascend(p, init);
    if (ascent_iterations) *ascent_iterations = ascent.iterations;
    if (ascent.diverged) throw NoFold("Collatz-Wielandt ascent diverged: the state amplitude grew without bound");
    MooreSpenceOptions ms;
    ms.tol = cfg.tol;
    return moore_spence_from_state(p, ascent.best.state, ms);
}

FoldPoint continuation_fold(const Problem& p, const RunConfig& cfg) {
    const Branch branch = continue_branch(p, cfg.lambda_start, cfg.step, cfg.max_records);
    return detect_fold(p, branch, cfg.fold_tol).fold;
}

}  // namespace

ModelSpec build_model(const RunConfig& cfg) {
    if (cfg.model == "abc") return abc_model(cfg.q, cfg.gamma);
    if (cfg.model == "coupled") return coupled_model(cfg.q);
    require_usage(cfg.components >= 1, "--components must be at least 1");
    if (cfg.model == "sublinear") return sublinear_model(cfg.components, cfg.q);
    if (cfg.model == "terms") {
        require_usage(!cfg.terms.empty(), "--model terms requires --terms");
        return ModelSpec("terms", cfg.components, cfg.q, parse_terms(cfg.terms, cfg.components));
    }
    throw UsageError("unknown model '" + cfg.model + "' (expected abc, coupled, sublinear or terms)");
}

Grid build_grid(const RunConfig& cfg) { return foldfinder::build_grid(parse_domain(cfg.grid, cfg.extent)); }

int worker_threads() {
    int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("FOLDFINDER_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min<long>(n, cap);
    }
    return n;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    check_tolerances(cfg);
    const ModelSpec spec = build_model(cfg);
    if (!model_is_solvable(spec, err, false)) return kExitInvalidModel;
    require_usage(cfg.lambda.has_value(), "solve requires --lambda");
    const double lambda = *cfg.lambda;
    require_usage(lambda > 0.0, "--lambda must be positive");
    require_usage(cfg.restarts >= 0, "--restarts must be nonnegative");

    const Grid grid = build_grid(cfg);
    const Problem p(grid, spec);
    const double upper = upper_bound_lambda(spec, grid);
    if (lambda > upper) {
        out << "no solution: lambda=" << fmt(lambda) << " exceeds the upper bound Lambda=" << fmt(upper) << '\n';
        return kExitNoConvergence;
    }

    NehariOptions opts;
    opts.tol = cfg.tol;
    SolveReport best;
    try {
        const Field init = cfg.init.empty() ? solve_sublinear(p, lambda) : read_solution_csv(cfg.init, grid);
        best = solve_nehari(p, lambda, init, opts);
    } catch (const FiberEmpty&) {
        best.converged = false;
    }
    if (!best.converged && cfg.restarts > 0) {
        const MultistartResult ms = multistart(p, lambda, cfg.restarts, cfg.seed, worker_threads(), opts);
        const double stab_tol = stability_tolerance(p);
        for (std::size_t k = 0; k < ms.nehari.size() && !best.converged; ++k) {
            for (const SolveReport* r : {&ms.nehari[k], &ms.newton[k]}) {
                if (r->converged && r->delta >= -stab_tol) {
                    best = *r;
                    break;
                }
            }
        }
    }
    if (!best.converged) {
        out << "no convergence: no stable solution found at lambda=" << fmt(lambda) << '\n';
        return kExitNoConvergence;
    }
    write_to(cfg.output.empty() ? std::string("solution.csv") : cfg.output, out,
             [&](std::ostream& s) { write_solution_csv(s, grid, best.state); });
    out << "lambda=" << fmt(best.lambda) << " energy=" << fmt(best.energy) << " delta=" << fmt(best.delta)
        << " residual=" << fmt(best.residual_norm) << " iterations=" << best.iterations << '\n';
    return kExitOk;
}

int cmd_fold(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    check_tolerances(cfg);
    const ModelSpec spec = build_model(cfg);
    if (!model_is_solvable(spec, err, true)) return kExitInvalidModel;
    require_usage(cfg.method == "direct" || cfg.method == "continuation", "--method must be direct or continuation");
    require_usage(cfg.lambda_start > 0.0 && cfg.step > 0.0 && cfg.max_records > 1,
                  "--lambda-start, --step and --max-records must be positive");

    const Grid grid = build_grid(cfg);
    const Problem p(grid, spec);
    FoldPoint fp;
    int ascent_iterations = 0;
    try {
        if (cfg.method == "direct") {
            const double lambda0 = cfg.lambda.value_or(cfg.lambda_start);
            require_usage(lambda0 > 0.0, "--lambda must be positive");
            const Field init = cfg.init.empty() ? solve_sublinear(p, lambda0) : read_solution_csv(cfg.init, grid);
            fp = direct_fold(p, cfg, init, &ascent_iterations);
        } else {
            fp = continuation_fold(p, cfg);
        }
    } catch (const FoldDivergence& e) {
        out << "no certified fold: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        out << "no certified fold: " << e.what() << '\n';
        return kExitNoConvergence;
    }

    out << "lambda_star=" << fmt(fp.lambda) << '\n'
        << "delta=" << fmt(fp.delta) << '\n'
        << "residual_f=" << fmt(fp.residual_f) << " residual_hv=" << fmt(fp.residual_hv)
        << " residual_norm=" << fmt(fp.residual_norm) << '\n'
        << "newton_iterations=" << fp.newton_iterations << " ascent_iterations=" << ascent_iterations << '\n';
    if (!fp.converged) {
        out << "no certified fold: criteria not met\n";
        return kExitNoConvergence;
    }
    write_to(cfg.output.empty() ? std::string("fold.csv") : cfg.output, out,
             [&](std::ostream& s) { write_fold_csv(s, grid, fp.u, fp.v); });
    return kExitOk;
}

int cmd_continue(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    check_tolerances(cfg);
    const ModelSpec spec = build_model(cfg);
    if (!model_is_solvable(spec, err, false)) return kExitInvalidModel;
    require_usage(cfg.lambda_start > 0.0, "--lambda-start must be positive");
    require_usage(!cfg.lambda_end || *cfg.lambda_end > cfg.lambda_start,
                  "empty lambda range: --lambda-end must exceed --lambda-start");
    require_usage(cfg.step > 0.0, "--step must be positive");
    require_usage(cfg.max_records > 1, "--max-records must be at least 2");

    const Grid grid = build_grid(cfg);
    const Problem p(grid, spec);
    Branch branch;
    try {
        branch = continue_branch(p, cfg.lambda_start, cfg.step, cfg.max_records);
    } catch (const Error& e) {
        err << "trace failure: " << e.what() << '\n';
        return kExitNoConvergence;
    }
    if (cfg.lambda_end) {
        const auto past = std::find_if(branch.records.begin(), branch.records.end(),
                                       [&](const BranchRecord& r) { return r.lambda > *cfg.lambda_end; });
        if (past != branch.records.end()) {
            branch.records.erase(past, branch.records.end());
            branch.fold_bracketed = false;
        }
    }
    write_to(cfg.output, out, [&](std::ostream& s) { write_branch_csv(s, branch); });
    err << "records=" << branch.records.size() << " fold_bracketed=" << (branch.fold_bracketed ? 1 : 0)
        << " pseudo_arclength=" << (branch.switched_to_arclength ? 1 : 0) << '\n';
    return kExitOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    check_tolerances(cfg);
    const ModelSpec spec = build_model(cfg);
    if (!model_is_solvable(spec, err, true)) return kExitInvalidModel;
    const std::vector<int> sizes = parse_sizes(cfg.sizes);
    require_usage(cfg.lambda_start > 0.0 && cfg.step > 0.0 && cfg.max_records > 1,
                  "--lambda-start, --step and --max-records must be positive");

    const std::vector<std::string> methods{"direct", "continuation"};
    std::vector<BenchRow> rows(sizes.size() * methods.size());
    std::vector<std::string> failures(rows.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < rows.size(); k = next++) {
            BenchRow& row = rows[k];
            row.method = methods[k % methods.size()];
            row.grid_n = sizes[k / methods.size()];
            row.lambda_star = std::numeric_limits<double>::quiet_NaN();
            try {
                const Problem p(make_interval(row.grid_n), spec);
                reset_linear_solve_count();
                const auto start = std::chrono::steady_clock::now();
                const FoldPoint fp = row.method == "direct"
                                         ? direct_fold(p, cfg, solve_sublinear(p, cfg.lambda_start), nullptr)
                                         : continuation_fold(p, cfg);
                row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                row.linear_solves = linear_solve_count();
                row.lambda_star = fp.lambda;
                if (!fp.converged) failures[k] = "fold not certified";
            } catch (const Error& e) {
                failures[k] = e.what();
            }
        }
    };
    const int workers = std::clamp(worker_threads(), 1, static_cast<int>(rows.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    write_to(cfg.output, out, [&](std::ostream& s) { write_bench_csv(s, rows); });
    int status = kExitOk;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (!failures[k].empty()) {
            err << rows[k].method << " n=" << rows[k].grid_n << ": " << failures[k] << '\n';
            status = kExitNoConvergence;
        }
    }
    return status;
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const ModelSpec spec = build_model(cfg);
    const HypothesisReport report = validate_hypotheses(spec);
    out << report.to_string();
    if (!report.solvable()) return kExitInvalidModel;

    const Grid grid = build_grid(cfg);
    const Problem p(grid, spec);
    const double lambda = cfg.lambda.value_or(1.0);
    require_usage(lambda > 0.0, "--lambda must be positive");
    const Field u = random_initial_state(p, lambda, cfg.seed);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto random_direction = [&] {
        Field xi = p.zero_field();
        for (Eigen::Index k = 0; k < xi.values().size(); ++k) xi.values()[k] = unit(rng) * u.values()[k];
        return xi;
    };
    constexpr double kEps = 1e-5;
    constexpr double kTol = 1e-6;
    bool ok = true;
    auto report_line = [&](const char* name, double error, double tol) {
        const bool pass = error <= tol;
        ok = ok && pass;
        out << (pass ? "PASS " : "FAIL ") << name << " relative_error=" << fmt(error) << '\n';
    };
    auto shifted = [&](const Field& xi, double s) { return Field(u.components(), u.values() + s * xi.values()); };

    const Field xi = random_direction();
    const Field eta = random_direction();
    const double fd_phi = (phi(p, shifted(xi, kEps), lambda) - phi(p, shifted(xi, -kEps), lambda)) / (2.0 * kEps);
    const double an_phi = p.dot(phi_grad(p, u, lambda), xi);
    report_line("gradient", std::abs(fd_phi - an_phi) / std::max(std::abs(an_phi), 1e-300), kTol);

    const LinearOperator h = hessian_operator(p, u, lambda);
    const Vector fd_h =
        (phi_grad(p, shifted(xi, kEps), lambda).values() - phi_grad(p, shifted(xi, -kEps), lambda).values()) /
        (2.0 * kEps);
    const Vector an_h = h.apply(xi.values());
    report_line("hessian", weighted_norm(p.weights(), fd_h - an_h) / weighted_norm(p.weights(), an_h), kTol);

    const double a = weighted_dot(p.weights(), h.apply(xi.values()), eta.values());
    const double b = weighted_dot(p.weights(), h.apply(eta.values()), xi.values());
    report_line("hessian_symmetry", std::abs(a - b) / std::max(std::abs(a), 1e-300), 1e-12);

    if (report.g4.status == CheckStatus::fail) err << "warning: (g4) fails; a finite fold is not guaranteed\n";
    return ok ? kExitOk : kExitNoConvergence;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Locate fold (saddle-node) points of concave-convex Dirichlet systems", "foldfinder"};
    app.set_config("--config", "", "Flat 'key = value' file; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1, 1);

    app.add_option("--model", cfg.model, "abc | coupled | sublinear | terms")->capture_default_str();
    app.add_option("--q", cfg.q, "Sublinear exponent, 1 < q < 2")->capture_default_str();
    app.add_option("--gamma", cfg.gamma, "Power of the abc model")->capture_default_str();
    app.add_option("--terms", cfg.terms, "Monomials of G: 'c:p1,..,pm;...'");
    app.add_option("--components", cfg.components, "Number of components for sublinear/terms")->capture_default_str();
    app.add_option("--grid", cfg.grid, "interval:N or rectangle:NXxNY")->capture_default_str();
    app.add_option("--extent", cfg.extent, "L or LXxLY (default unit)");
    app.add_option("--lambda", cfg.lambda, "Parameter value (solve); ascent start (fold)");
    app.add_option("--lambda-start", cfg.lambda_start, "First lambda of a branch")->capture_default_str();
    app.add_option("--lambda-end", cfg.lambda_end, "Last lambda of a branch");
    app.add_option("--step", cfg.step, "Initial continuation step")->capture_default_str();
    app.add_option("--max-records", cfg.max_records, "Branch record cap")->capture_default_str();
    app.add_option("--tol", cfg.tol, "Solver tolerance")->capture_default_str();
    app.add_option("--fold-tol", cfg.fold_tol, "Bisection / Moore-Spence agreement tolerance")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    app.add_option("--restarts", cfg.restarts, "Multi-start attempts after a failed solve")->capture_default_str();
    app.add_option("--method", cfg.method, "fold: direct | continuation")->capture_default_str();
    app.add_option("--sizes", cfg.sizes, "bench: comma-separated interior node counts")->capture_default_str();
    app.add_option("--output,-o", cfg.output, "Output CSV path");
    app.add_option("--init", cfg.init, "Initial state CSV (solve, fold)");

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const RunConfig&, std::ostream&, std::ostream&);
    };
    const Command commands[] = {
        {"solve", "Stable solution at a fixed lambda by Nehari minimization", cmd_solve},
        {"fold", "Certified fold point by Collatz-Wielandt ascent or continuation", cmd_fold},
        {"continue", "Trace the stable branch and write it as CSV", cmd_continue},
        {"bench", "Compare direct and continuation fold location across grids", cmd_bench},
        {"check", "Hypothesis validation and derivative consistency checks", cmd_check},
    };
    for (const Command& c : commands) app.add_subcommand(c.name, c.help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const CLI::App* chosen = app.get_subcommands().front();
    for (const Command& c : commands) {
        if (chosen->get_name() != c.name) continue;
        try {
            return c.run(cfg, out, err);
        } catch (const UsageError& e) {
            err << "usage error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const InvalidArgument& e) {
            err << "usage error: " << e.what() << '\n';
            return kExitUsage;
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return kExitNoConvergence;
        }
    }
    return kExitUsage;
}

}  // namespace foldfinder
