#include "oracles.hpp"

#include "foldfinder/error.hpp"
#include "foldfinder/nehari.hpp"
#include "foldfinder/spectrum.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace foldfinder;
using oracle::one_node;

TEST(ProjectNehari, SmallestFiberRootAtLambdaOne) {
    EXPECT_NEAR(project_nehari(oracle::abc(1), one_node(1.0), 1.0), oracle::kFiberRootAt1, 1e-15);
}

TEST(ProjectNehari, UnitAmplitudeSolvesAtSeven) {
    const Problem p = oracle::abc(1);
    EXPECT_NEAR(project_nehari(p, one_node(1.0), 7.0), 1.0, 1e-14);
    EXPECT_GT(fiber(p, one_node(1.0), 1.0).second, 0.0);
}

TEST(ProjectNehari, EmptyFiberAboveMaximum) {
    try {
        project_nehari(oracle::abc(1), one_node(1.0), 8.0);
        FAIL() << "expected FiberEmpty";
    } catch (const FiberEmpty& e) {
        EXPECT_NEAR(e.fiber_maximum(), oracle::kLambdaStar, 1e-12);
    }
}

TEST(ProjectNehari, ProjectionLiesOnStableFiberBranch) {
    const Problem p = Problem(make_interval(17), coupled_model(1.5));
    const Field v = oracle::random_positive(p, 4);
    const double t = project_nehari(p, v, 2.0);
    EXPECT_NEAR(fiber(p, v, t).first, 2.0, 1e-12);
    EXPECT_GT(fiber(p, v, t).second, 0.0);
}

TEST(ProjectNehari, InvalidInputs) {
    EXPECT_THROW(project_nehari(oracle::abc(1), one_node(1.0), 0.0), InvalidArgument);
    EXPECT_THROW(project_nehari(oracle::abc(1), one_node(-1.0), 1.0), DomainError);
}

TEST(SolveNehari, OneNodeSolutionAtSeven) {
    const SolveReport r = solve_nehari(oracle::abc(1), 7.0);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.state.values()[0], 1.0, 1e-12);
    EXPECT_NEAR(r.energy, 0.5 * (4.0 - 7.0 / 1.5 - 0.25), 1e-12);
    EXPECT_LT(r.energy, 0.0);
}

TEST(SolveNehari, SublinearModelReturnsTorsionLikeSolution) {
    const Problem p(make_interval(1), sublinear_model(1, 1.5));
    for (double lambda : {2.0, 5.0}) {
        const SolveReport r = solve_nehari(p, lambda);
        ASSERT_TRUE(r.converged);
        EXPECT_NEAR(r.state.values()[0], std::pow(lambda / 8.0, 2.0), 1e-12);
    }
}

TEST(SolveNehari, NonexistenceAboveFold) {
    const Problem p = oracle::abc(1);
    const MultistartResult m = multistart(p, 1.01 * oracle::kLambdaStar, 10, 3);
    EXPECT_EQ(m.successes(), 0);
}

TEST(SolveNehari, RejectsBadInput) {
    EXPECT_THROW(solve_nehari(oracle::abc(3), -1.0), InvalidArgument);
    const Problem p = oracle::abc(3);
    EXPECT_THROW(solve_nehari(p, 1.0, p.zero_field()), DomainError);
}

TEST(SolveSublinear, OneNodeValues) {
    const Problem p(make_interval(1), sublinear_model(1, 1.5));
    EXPECT_NEAR(solve_sublinear(p, 8.0).values()[0], 1.0, 1e-14);
    EXPECT_NEAR(solve_sublinear(p, 2.0).values()[0], 0.0625, 1e-15);
}

TEST(SolveSublinear, ScalingLaw) {
    for (const Grid& g : {make_interval(31), make_rectangle(7, 5)}) {
        const Problem p(g, abc_model(1.5, 4.0));
        const Field w1 = solve_sublinear(p, 1.0);
        const Field w2 = solve_sublinear(p, 2.0);
        EXPECT_LE((w2.values() - 4.0 * w1.values()).lpNorm<Eigen::Infinity>(), 1e-8 * w2.max_abs());
    }
}

TEST(NehariProperties, SolutionsHaveNegativeEnergyAndDominateSublinearSolution) {
    for (const Problem& p : {oracle::abc(31), Problem(make_interval(15), coupled_model(1.5)),
                             Problem(make_rectangle(6, 6), abc_model(1.5, 4.0))}) {
        for (double lambda : {0.5, 2.0, 5.0}) {
            const SolveReport r = solve_nehari(p, lambda);
            ASSERT_TRUE(r.converged) << lambda;
            EXPECT_LT(r.energy, 0.0);
            EXPECT_GT(r.delta, 0.0);
            EXPECT_LE(r.residual_norm, 1e-10);
            const Field w = solve_sublinear(p, lambda);
            EXPECT_GE((r.state.values() - w.values()).minCoeff(), -1e-12 * w.max_abs());
        }
    }
}

TEST(NehariProperties, RandomStartsReachTheSameStableSolution) {
    const Problem p = oracle::abc(31);
    const SolveReport ref = solve_nehari(p, 5.0);
    const MultistartResult m = multistart(p, 5.0, 6, 42, 2);
    for (const SolveReport& r : m.nehari) {
        ASSERT_TRUE(r.converged);
        EXPECT_LE((r.state.values() - ref.state.values()).lpNorm<Eigen::Infinity>(), 1e-8 * ref.state.max_abs());
    }
}

TEST(NehariProperties, MultistartIsDeterministicAcrossThreadCounts) {
    const Problem p = oracle::abc(15);
    const MultistartResult a = multistart(p, 3.0, 4, 9, 1);
    const MultistartResult b = multistart(p, 3.0, 4, 9, 3);
    for (std::size_t k = 0; k < a.nehari.size(); ++k) {
        EXPECT_EQ(a.nehari[k].state.values(), b.nehari[k].state.values());
        EXPECT_EQ(a.newton[k].state.values(), b.newton[k].state.values());
    }
}

TEST(DampedNewton, ConvergesFromNearbyState) {
    const Problem p = oracle::abc(31);
    const SolveReport ref = solve_nehari(p, 5.0);
    Field init = ref.state;
    init.values() *= 1.05;
    const SolveReport r = solve_damped_newton(p, 5.0, init);
    ASSERT_TRUE(r.converged);
    EXPECT_LE((r.state.values() - ref.state.values()).lpNorm<Eigen::Infinity>(), 1e-8 * ref.state.max_abs());
}
