#include "oracles.hpp"

#include "foldfinder/cw.hpp"
#include "foldfinder/fold.hpp"
#include "foldfinder/nehari.hpp"
#include "foldfinder/spectrum.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace foldfinder;
using oracle::one_node;

TEST(CwValue, OneNodeExamples) {
    const Problem p = oracle::abc(1);
    const CwCandidate a = cw_value(p, one_node(1.0));
    EXPECT_NEAR(a.lambda_cw, 7.0, 1e-15);
    EXPECT_EQ(a.gap, 0.0);
    EXPECT_NEAR(cw_value(p, one_node(2.0)).lambda_cw, 8.0 / std::sqrt(2.0), 1e-14);
}

TEST(CwValue, ExactSolutionHasUniformRatios) {
    const Problem p = oracle::abc(31);
    const SolveReport s = solve_nehari(p, 5.0);
    ASSERT_TRUE(s.converged);
    const CwCandidate c = cw_value(p, s.state);
    EXPECT_NEAR(c.lambda_cw, 5.0, 1e-7);
    EXPECT_LE(c.gap, 1e-7 * 5.0);
}

TEST(CwValue, ReportsActiveNode) {
    const Problem p = oracle::abc(3);
    Field u = p.constant_field(1.0);
    u(0, 1) = 0.5;  // the middle node has a negative ratio
    const CwCandidate c = cw_value(p, u);
    EXPECT_EQ(c.active_component, 0);
    EXPECT_EQ(c.active_node, 1);
}

TEST(CwProperties, RatioSandwich) {
    for (const Problem& p : {oracle::abc(21), Problem(make_rectangle(5, 4), coupled_model(1.5))}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            const Field u = oracle::random_positive(p, seed, 0.05, 2.0);
            const Vector rho = cw_ratios(p, u);
            const double r = rayleigh_nl(p, u);
            EXPECT_LE(rho.minCoeff(), r + 1e-12 * std::abs(r));
            EXPECT_LE(r, rho.maxCoeff() + 1e-12 * std::abs(r));
        }
    }
}

TEST(CwAscend, OneNodeReachesClosedFormFold) {
    const CwAscentResult r = cw_ascend(oracle::abc(1), one_node(1.0));
    EXPECT_NEAR(r.best.state.values()[0], oracle::kUStar, 1e-6);
    EXPECT_NEAR(r.best.lambda_cw, oracle::kLambdaStar, 1e-10);
    EXPECT_FALSE(r.diverged);
}

TEST(CwAscend, SublinearModelDiverges) {
    const Problem p(make_interval(15), sublinear_model(1, 1.5));
    const CwAscentResult r = cw_ascend(p, solve_sublinear(p, 1.0));
    EXPECT_TRUE(r.diverged);
    EXPECT_FALSE(r.converged);
}

TEST(CwAscend, SymmetricCoupledModelStaysSymmetric) {
    const Problem p(make_interval(31), coupled_model(1.5));
    const CwAscentResult r = cw_ascend(p, solve_sublinear(p, 1.0));
    const Field& u = r.best.state;
    EXPECT_LE((u.component(0) - u.component(1)).lpNorm<Eigen::Infinity>(), 1e-8 * u.max_abs());
}

TEST(CwAscend, BestCandidateIsStableAndBelowFold) {
    const Problem p = oracle::abc(31);
    const CwAscentResult r = cw_ascend(p, solve_sublinear(p, 1.0));
    const FoldPoint f = moore_spence_from_state(p, r.best.state);
    ASSERT_TRUE(f.converged);
    EXPECT_GE(r.best.delta, -stability_tolerance(p));
    EXPECT_LE(r.best.lambda_cw, f.lambda * (1.0 + 1e-9));
    EXPECT_GT(r.best.lambda_cw, 0.9 * f.lambda);
}

TEST(UpperBound, OneNodeBoundEqualsFold) {
    EXPECT_NEAR(upper_bound_lambda(abc_model(1.5, 4.0), make_interval(1)), oracle::kLambdaStar, 1e-12);
}

TEST(UpperBound, ThreeNodeBound) {
    EXPECT_NEAR(upper_bound_lambda(abc_model(1.5, 4.0), make_interval(3)), oracle::kLambdaBound3, 1e-11);
}

TEST(UpperBound, PositiveForValidatedModels) {
    for (const ModelSpec& m : {abc_model(1.5, 4.0), abc_model(1.2, 6.0), coupled_model(1.5),
                               ModelSpec("three", 3, 1.5, parse_terms("1:4,0,0;1:0,4,0;1:0,0,4;1:2,1,1", 3))}) {
        const double b = upper_bound_lambda(m, make_rectangle(4, 4));
        EXPECT_GT(b, 0.0) << m.name();
        EXPECT_TRUE(std::isfinite(b)) << m.name();
    }
}

TEST(UpperBound, InfiniteWithoutSuperlinearTerms) {
    EXPECT_EQ(upper_bound_lambda(sublinear_model(1, 1.5), make_interval(5)), std::numeric_limits<double>::infinity());
}

TEST(UpperBound, SmallerMaskGivesLargerBound) {
    const Grid g = make_interval(15);
    std::vector<bool> half(15, false);
    for (int i = 0; i < 7; ++i) half[i] = true;
    EXPECT_GT(upper_bound_lambda(abc_model(1.5, 4.0), g, half), upper_bound_lambda(abc_model(1.5, 4.0), g));
}
