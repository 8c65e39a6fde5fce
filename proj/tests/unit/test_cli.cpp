#include "foldfinder/cli.hpp"
#include "foldfinder/csv.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace foldfinder;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    args.insert(args.begin(), "foldfinder");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("foldfinder_cli_" + name)).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

}  // namespace

TEST(Cli, SolveWritesOneRowPerNode) {
    const std::string path = temp_path("solve.csv");
    const CliRun r = run({"solve", "--model", "abc", "--q", "1.5", "--gamma", "4", "--grid", "interval:127", "--lambda",
                       "1.0", "--output", path});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(count_lines(slurp(path)), 128);
    EXPECT_NE(r.out.find("energy="), std::string::npos);
    EXPECT_NE(r.out.find("delta="), std::string::npos);
}

TEST(Cli, InvalidModelNamesFailingHypothesis) {
    const CliRun r = run({"solve", "--gamma", "3", "--lambda", "1.0", "--grid", "interval:15"});
    EXPECT_EQ(r.code, kExitInvalidModel);
    EXPECT_NE(r.err.find("(g3): FAIL"), std::string::npos);
}

TEST(Cli, LambdaAboveBoundSignalsNonexistence) {
    EXPECT_EQ(run({"solve", "--lambda", "100", "--grid", "interval:31"}).code, kExitNoConvergence);
}

TEST(Cli, LambdaBetweenFoldAndBoundFailsToConverge) {
    // The n=31 fold is near 9.037 and the ray bound near 9.32.
    EXPECT_EQ(run({"solve", "--lambda", "9.2", "--grid", "interval:31", "--restarts", "4",
                   "--output", temp_path("none.csv")}).code,
              kExitNoConvergence);
}

TEST(Cli, FoldOnSingleNode) {
    const std::string path = temp_path("fold1.csv");
    const CliRun r = run({"fold", "--grid", "interval:1", "--output", path});
    EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
    EXPECT_NE(r.out.find("lambda_star=7.19796896243646"), std::string::npos) << r.out;
    EXPECT_EQ(slurp(path).substr(0, 10), "x,u_1,v_1\n");
}

TEST(Cli, FoldMethodsAgree) {
    auto lambda_of = [](const std::string& out) {
        const auto k = out.find("lambda_star=");
        return std::stod(out.substr(k + 12));
    };
    const CliRun direct = run({"fold", "--grid", "interval:31", "--output", temp_path("fd.csv")});
    const CliRun cont = run({"fold", "--grid", "interval:31", "--method", "continuation", "--output", temp_path("fc.csv")});
    ASSERT_EQ(direct.code, kExitOk);
    ASSERT_EQ(cont.code, kExitOk);
    EXPECT_NEAR(lambda_of(direct.out), lambda_of(cont.out), 1e-9 * lambda_of(cont.out));
}

TEST(Cli, NoFoldWithoutSuperlinearTerm) {
    const CliRun r = run({"fold", "--model", "sublinear", "--grid", "interval:15"});
    EXPECT_EQ(r.code, kExitNoConvergence);
    EXPECT_NE(r.err.find("(g4)"), std::string::npos);
}

TEST(Cli, ContinueWritesBranchCsv) {
    const CliRun r = run({"continue", "--grid", "interval:1"});
    ASSERT_EQ(r.code, kExitOk);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "lambda,sup_norm,energy,delta,corrector_iters");
    EXPECT_NE(r.err.find("fold_bracketed=1"), std::string::npos);
}

TEST(Cli, EmptyLambdaRangeIsUsageError) {
    EXPECT_EQ(run({"continue", "--lambda-start", "2", "--lambda-end", "1"}).code, kExitUsage);
    EXPECT_EQ(run({"continue", "--lambda-start", "2", "--lambda-end", "2"}).code, kExitUsage);
}

TEST(Cli, BenchRowsForEachSizeAndMethod) {
    const CliRun r = run({"bench", "--sizes", "7,15"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(count_lines(r.out), 5);
    EXPECT_NE(r.out.find("direct,7,"), std::string::npos);
    EXPECT_NE(r.out.find("continuation,15,"), std::string::npos);
    EXPECT_EQ(run({"bench", "--sizes", ","}).code, kExitUsage);
    EXPECT_EQ(run({"bench", "--sizes", "3,x"}).code, kExitUsage);
}

TEST(Cli, CheckRunsDerivativeSuite) {
    const CliRun r = run({"check", "--grid", "rectangle:4x5", "--model", "coupled"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("PASS gradient"), std::string::npos);
    EXPECT_NE(r.out.find("PASS hessian_symmetry"), std::string::npos);
    EXPECT_EQ(run({"check", "--q", "2.5", "--gamma", "6"}).code, kExitInvalidModel);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"solve", "--lambda", "abc"}).code, kExitUsage);
    EXPECT_EQ(run({"solve"}).code, kExitUsage);
    EXPECT_EQ(run({"solve", "--lambda", "1", "--tol", "0"}).code, kExitUsage);
    EXPECT_EQ(run({"solve", "--lambda", "1", "--grid", "triangle:3"}).code, kExitUsage);
    EXPECT_EQ(run({"solve", "--lambda", "1", "--model", "cubic"}).code, kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, ConfigFileWithFlagOverride) {
    const std::string cfg = temp_path("run.cfg");
    const std::string out1 = temp_path("cfg1.csv"), out2 = temp_path("cfg2.csv");
    std::ofstream(cfg) << "# one-node run\nmodel = abc\ngrid = interval:1\nlambda = 7\n";
    const CliRun a = run({"solve", "--config", cfg, "--output", out1});
    ASSERT_EQ(a.code, kExitOk) << a.err;
    EXPECT_NE(a.out.find("lambda=7 "), std::string::npos);
    const CliRun b = run({"solve", "--config", cfg, "--lambda", "2", "--output", out2});
    ASSERT_EQ(b.code, kExitOk);
    EXPECT_NE(b.out.find("lambda=2 "), std::string::npos);
}

TEST(Cli, ConfigFileRejectsUnknownKeys) {
    const std::string cfg = temp_path("bad.cfg");
    std::ofstream(cfg) << "lambda = 1\ncolour = blue\n";
    EXPECT_EQ(run({"solve", "--config", cfg}).code, kExitUsage);
}

TEST(Cli, InitialStateFromCsvReproducesEnergyAndStability) {
    auto field = [](const std::string& out, const std::string& key) {
        const auto k = out.find(key + "=");
        return std::stod(out.substr(k + key.size() + 1));
    };
    const std::string first = temp_path("init_a.csv"), second = temp_path("init_b.csv");
    const CliRun a = run({"solve", "--grid", "interval:31", "--lambda", "5", "--output", first});
    ASSERT_EQ(a.code, kExitOk);
    const CliRun b = run({"solve", "--grid", "interval:31", "--lambda", "5", "--init", first, "--output", second});
    ASSERT_EQ(b.code, kExitOk);
    EXPECT_NEAR(field(b.out, "energy"), field(a.out, "energy"), 1e-12 * std::abs(field(a.out, "energy")));
    EXPECT_NEAR(field(b.out, "delta"), field(a.out, "delta"), 1e-12 * std::abs(field(a.out, "delta")));
}

TEST(Cli, RerunsAreByteIdentical) {
    const std::string a = temp_path("rerun_a.csv"), b = temp_path("rerun_b.csv");
    ASSERT_EQ(run({"fold", "--grid", "interval:31", "--seed", "3", "--output", a}).code, kExitOk);
    ASSERT_EQ(run({"fold", "--grid", "interval:31", "--seed", "3", "--output", b}).code, kExitOk);
    EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Cli, ThreadCapFromEnvironment) {
    ::setenv("FOLDFINDER_THREADS", "1", 1);
    EXPECT_EQ(worker_threads(), 1);
    ::setenv("FOLDFINDER_THREADS", "not-a-number", 1);
    EXPECT_GE(worker_threads(), 1);
    ::unsetenv("FOLDFINDER_THREADS");
    EXPECT_GE(worker_threads(), 1);
}
