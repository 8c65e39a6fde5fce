// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.

#include "foldfinder/cw.hpp"
#include "foldfinder/error.hpp"
#include "foldfinder/fold.hpp"
#include "foldfinder/nehari.hpp"
#include "foldfinder/spectrum.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace foldfinder;

namespace {

constexpr double kUStar = 1.26491106406735173280;       // sqrt(1.6)
constexpr double kLambdaStar = 7.19796896243646822906;  // 8 sqrt(u*) - u*^{5/2}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

int threads() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

FoldPoint direct_fold(const Problem& p) {
    const CwAscentResult a = cw_ascend(p, solve_sublinear(p, 1.0));
    return moore_spence_from_state(p, a.best.state);
}

FoldPoint continuation_fold(const Problem& p) {
    return detect_fold(p, continue_branch(p, 1.0, 0.5, 400), 1e-8).fold;
}

Problem abc(int n) { return Problem(make_interval(n), abc_model(1.5, 4.0)); }

Outcome single_node_fold() {
    const auto t0 = Clock::now();
    const Problem p = abc(1);
    const FoldPoint f = direct_fold(p);
    const double dt = seconds_since(t0);
    const double du = std::abs(f.u.values()[0] - kUStar);
    const double dl = std::abs(f.lambda - kLambdaStar);
    const double delta = std::abs(stability_index(p, f.u).delta);
    return {f.converged && du <= 1e-10 && dl <= 1e-10 && delta <= 1e-8 && dt < 0.1,
            "|u-u*|=" + num(du, 3) + " |lambda-lambda*|=" + num(dl, 3) + " |delta|=" + num(delta, 3) +
                " t=" + num(dt, 3) + "s"};
}

Outcome cross_method_agreement() {
    const auto t0 = Clock::now();
    const Problem p = abc(127);
    const FoldPoint d = direct_fold(p);
    const FoldPoint c = continuation_fold(p);
    const double dt = seconds_since(t0);
    const double diff = std::abs(d.lambda - c.lambda);
    return {d.converged && c.converged && diff <= 1e-6 * c.lambda && dt <= 10.0,
            "direct=" + num(d.lambda, 13) + " continuation=" + num(c.lambda, 13) + " diff=" + num(diff, 3) +
                " t=" + num(dt, 3) + "s"};
}

Outcome mesh_convergence() {
    std::vector<double> lambdas;
    for (int n : {31, 63, 127, 255}) lambdas.push_back(continuation_fold(abc(n)).lambda);
    const double r1 = (lambdas[1] - lambdas[0]) / (lambdas[2] - lambdas[1]);
    const double r2 = (lambdas[2] - lambdas[1]) / (lambdas[3] - lambdas[2]);
    const bool ok = r1 >= 3.6 && r1 <= 4.4 && r2 >= 3.6 && r2 <= 4.4;
    return {ok, "lambda*(n)=" + num(lambdas[0], 12) + "," + num(lambdas[1], 12) + "," + num(lambdas[2], 12) + "," +
                    num(lambdas[3], 12) + " ratios=" + num(r1, 5) + "," + num(r2, 5)};
}

Outcome system_reduction() {
    const Grid g = make_interval(63);
    const Problem coupled(g, coupled_model(1.5));
    const Problem scalar(g, ModelSpec("reduced", 1, 1.5, parse_terms("0.75:4", 1)));
    const FoldPoint fc = direct_fold(coupled);
    const FoldPoint fs = continuation_fold(scalar);
    const double rel = std::abs(fc.lambda - fs.lambda) / fs.lambda;
    const double asym = (fc.u.component(0) - fc.u.component(1)).lpNorm<Eigen::Infinity>() / fc.u.max_abs();
    return {fc.converged && fs.converged && rel <= 1e-8 && asym <= 1e-8,
            "coupled=" + num(fc.lambda, 13) + " scalar=" + num(fs.lambda, 13) + " rel=" + num(rel, 3) +
                " max|u1-u2|/|u|=" + num(asym, 3)};
}

Outcome nonexistence_above_fold() {
    const Problem p = abc(63);
    const double lstar = continuation_fold(p).lambda;
    const double stab_tol = stability_tolerance(p);

    const double above = 1.02 * lstar;
    const MultistartResult m = multistart(p, above, 50, 2024, threads());
    int nehari_ok = 0, newton_ok = 0;
    for (const auto& r : m.nehari) nehari_ok += r.converged;
    for (const auto& r : m.newton) newton_ok += r.converged;

    // Collatz-Wielandt ascent from the sublinear solution and from random states.
    double best_cw = -std::numeric_limits<double>::infinity();
    std::vector<Field> starts{solve_sublinear(p, above)};
    for (std::uint64_t s = 0; s < 5; ++s) starts.push_back(random_initial_state(p, 1.0, 77 + s));
    for (const Field& s : starts) {
        try {
            best_cw = std::max(best_cw, cw_ascend(p, s).best.lambda_cw);
        } catch (const NoStableCandidate&) {
        }
    }

    const double below = 0.98 * lstar;
    const Branch b = continue_branch(p, 1.0, 0.5, 400);
    const BranchRecord* base = nullptr;
    for (const auto& r : b.records) {
        if (r.lambda <= below && r.delta > 0.0) base = &r;
    }
    bool below_ok = false;
    double below_delta = 0.0;
    if (base) {
        const SolveReport s = solve_damped_newton(p, below, base->state);
        below_delta = s.delta;
        below_ok = s.converged && s.delta > stab_tol;
    }
    return {nehari_ok == 0 && newton_ok == 0 && best_cw < above && below_ok,
            "above: nehari=" + std::to_string(nehari_ok) + "/50 newton=" + std::to_string(newton_ok) +
                "/50 best stable lambda_cw=" + num(best_cw, 10) + " < " + num(above, 10) +
                "; below: delta=" + num(below_delta, 4)};
}

Outcome bound_chain() {
    struct Case {
        std::string label;
        Problem p;
    };
    std::vector<Case> cases;
    cases.push_back({"abc n=1", abc(1)});
    cases.push_back({"abc n=31", abc(31)});
    cases.push_back({"abc q=1.2 gamma=5 n=31", Problem(make_interval(31), abc_model(1.2, 5.0))});
    cases.push_back({"abc 9x9", Problem(make_rectangle(9, 9), abc_model(1.5, 4.0))});
    cases.push_back({"coupled n=31", Problem(make_interval(31), coupled_model(1.5))});
    cases.push_back({"terms n=31", Problem(make_interval(31), ModelSpec("t", 1, 1.5, parse_terms("0.75:4;0.1:5", 1)))});
    bool ok = true;
    std::ostringstream detail;
    for (const auto& c : cases) {
        const double lstar = c.p.components() == 1 ? continuation_fold(c.p).lambda : direct_fold(c.p).lambda;
        const double upper = upper_bound_lambda(c.p.model(), c.p.grid());
        double max_nehari = 0.0;
        for (double f : {0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999, 1.001, 1.01, 1.05, 1.2}) {
            try {
                if (solve_nehari(c.p, f * lstar).converged) max_nehari = std::max(max_nehari, f * lstar);
            } catch (const Error&) {
            }
        }
        const bool here = max_nehari > 0.0 && max_nehari <= lstar && lstar <= upper;
        ok = ok && here;
        detail << c.label << ": " << num(max_nehari, 8) << "<=" << num(lstar, 8) << "<=" << num(upper, 8)
               << (here ? "" : " (violated)") << "; ";
    }
    return {ok, detail.str()};
}

Outcome formula_invariants() {
    bool ok = true;
    int checks = 0;
    std::ostringstream failures;
    auto expect = [&](bool cond, const std::string& what) {
        ++checks;
        if (!cond) {
            ok = false;
            failures << what << "; ";
        }
    };
    const std::vector<Problem> problems{abc(31), Problem(make_rectangle(7, 6), abc_model(1.5, 4.0)),
                                        Problem(make_interval(23), coupled_model(1.5))};
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pos(0.1, 2.0), sym(-1.0, 1.0);
    for (const Problem& p : problems) {
        const std::string tag = describe(p.grid()) + "/" + p.model().name();
        for (int trial = 0; trial < 5; ++trial) {
            Field u = p.zero_field(), v = p.zero_field(), xi = p.zero_field(), eta = p.zero_field();
            for (Eigen::Index k = 0; k < u.size(); ++k) {
                u.values()[k] = pos(rng);
                v.values()[k] = pos(rng);
                xi.values()[k] = sym(rng);
                eta.values()[k] = sym(rng);
            }
            const double r = rayleigh_ext(p, u, v);
            for (double s : {-2.0, 0.5}) {
                Field sv = v;
                sv.values() *= s;
                expect(rayleigh_ext(p, u, sv) == r, tag + " R(u,sv) bitwise s=" + num(s));
            }
            Field tv = v;
            tv.values() *= 10.0;
            expect(std::abs(rayleigh_ext(p, u, tv) - r) <= 1e-14 * std::max(1.0, std::abs(r)), tag + " R(u,10v)");
            expect(std::abs(rayleigh_ext(p, u, u) - rayleigh_nl(p, u)) <= 1e-13 * std::abs(rayleigh_nl(p, u)),
                   tag + " R(u,u)=R(u)");

            const double lambda = 2.0, eps = 1e-5;
            Field up = u, um = u;
            up.values() += eps * xi.values();
            um.values() -= eps * xi.values();
            const double fd = (phi(p, up, lambda) - phi(p, um, lambda)) / (2 * eps);
            const double an = p.dot(phi_grad(p, u, lambda), xi);
            expect(std::abs(fd - an) <= 1e-6 * std::abs(an), tag + " gradient FD");
            const LinearOperator h = hessian_operator(p, u, lambda);
            const Vector fdh = (phi_grad(p, up, lambda).values() - phi_grad(p, um, lambda).values()) / (2 * eps);
            const Vector anh = h.apply(xi.values());
            expect(weighted_norm(p.weights(), fdh - anh) <= 1e-6 * weighted_norm(p.weights(), anh),
                   tag + " Hessian FD");
            const double a = weighted_dot(p.weights(), h.apply(xi.values()), eta.values());
            const double b = weighted_dot(p.weights(), h.apply(eta.values()), xi.values());
            expect(std::abs(a - b) <= 1e-12 * std::abs(a), tag + " Hessian symmetry");
        }
        const Field w1 = solve_sublinear(p, 1.0);
        for (double lambda : {0.5, 2.0, 4.0}) {
            const Field w = solve_sublinear(p, lambda);
            const double factor = std::pow(lambda, 1.0 / (2.0 - p.q()));
            expect((w.values() - factor * w1.values()).lpNorm<Eigen::Infinity>() <= 1e-8 * w.max_abs(),
                   tag + " w-scaling");
            const SolveReport s = solve_nehari(p, lambda);
            expect(s.converged, tag + " Nehari converged");
            expect(s.energy < 0.0, tag + " Phi<0");
            expect((s.state.values() - w.values()).minCoeff() >= -1e-12 * w.max_abs(), tag + " u>=w");
        }
    }
    return {ok, std::to_string(checks) + " checks" + (ok ? "" : ", failed: " + failures.str())};
}

Outcome stability_classification() {
    const Problem one(make_interval(1), sublinear_model(1, 1.5));
    const double lambda = 3.0;
    const double d1 = stability_index(one, solve_sublinear(one, lambda)).delta;
    bool ok = std::abs(d1 - (2.0 - 1.5) * 8.0) <= 1e-10;
    std::ostringstream detail;
    detail << "n=1 delta=" << num(d1, 15);
    for (int n : {15, 63, 255}) {
        const Problem p(make_interval(n), sublinear_model(1, 1.5));
        const double d = stability_index(p, solve_sublinear(p, lambda)).delta;
        ok = ok && d > 0.0;
        detail << " n=" << n << " delta=" << num(d, 6);
    }
    const Problem sq(make_rectangle(15, 15), sublinear_model(1, 1.5));
    const double d2 = stability_index(sq, solve_sublinear(sq, lambda)).delta;
    ok = ok && d2 > 0.0;
    detail << " 15x15 delta=" << num(d2, 6);
    return {ok, detail.str()};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "single-node closed-form fold", single_node_fold},
        {2, "direct vs continuation agreement (n=127)", cross_method_agreement},
        {3, "second-order mesh convergence", mesh_convergence},
        {4, "coupled system reduces to scalar model", system_reduction},
        {5, "no stable solutions above the fold", nonexistence_above_fold},
        {6, "bound chain Nehari <= fold <= Lambda", bound_chain},
        {7, "formula invariant suite", formula_invariants},
        {8, "stability of the sublinear family", stability_classification},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
