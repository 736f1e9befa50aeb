#include <stirring/bounds.hpp>

#include "riemann_oracle.hpp"

#include <gtest/gtest.h>

#include <future>
#include <utility>
#include <vector>

using namespace stirring;

TEST(Bounds, ConstantLimits)
{
    EXPECT_NEAR(c1(2, 1e3), 4.0 / 18, 1e-15);
    EXPECT_NEAR(c2(2, 1e3), 1.0 / 12, 1e-15);
    EXPECT_NEAR(c1_star(39), 39.0 / 18, 1e-15);
    EXPECT_NEAR(c2_star(39, 11), 0.7125, 1e-12);
    EXPECT_EQ(c2_star(39, 0), 0.0);
    for (double T = 0.1; T < 8; T += 0.1)
    {
        EXPECT_LT(c1(3, T), c1(3, T + 0.1));
        EXPECT_LT(c2(3, T), c2(3, T + 0.1));
    }
}

TEST(Bounds, DriftCondition)
{
    const double expected = 0.7125 * (39.0 / 18) * 11 - 2 * (1 - 0.7125);
    EXPECT_NEAR(drift_condition(39, 11, true), expected, 1e-12);
    EXPECT_NEAR(drift_condition(39, 11, true), 16.41, 0.01);
    EXPECT_GT(drift_condition(39, 429.0 / 39, true), 0);
    EXPECT_LT(drift_condition(2, 0.01, false), -1.9);
    for (int d = 39; d <= 60; ++d)
    {
        for (double T = 1; T < 50; T += 0.25)
        {
            EXPECT_LE(drift_condition(d, T, true), drift_condition(d, T + 0.25, true));
        }
    }
}

TEST(Bounds, PercolationExclusion)
{
    EXPECT_NEAR(percolation_exclusion(2), std::log(2.0), 1e-15);
    for (int d = 2; d <= 10000; ++d)
    {
        EXPECT_GT(percolation_exclusion(d), 1.0 / d + 0.5 / (double(d) * d));
    }
    EXPECT_NEAR(1e8 * percolation_exclusion(1e8), 1.0, 1e-7);
}

TEST(Bounds, LemcompF)
{
    EXPECT_NEAR(lemcomp_f(3), 953.0 / 30, 1e-12);
    EXPECT_LE(lemcomp_f(3), 32);
    EXPECT_LT(lemcomp_f(4), lemcomp_f(3));
    EXPECT_NEAR(lemcomp_f(1e9), 31.0 / 6, 1e-6);
    EXPECT_THROW(lemcomp_f(13.0 / 6), DomainError);
}

TEST(Bounds, ExprReferenceValues)
{
    const double d0 = 1287;
    const double small = angel_criterion(d0, 2 / d0);
    EXPECT_NEAR(small, (d0 - 1) * (2 / d0) * std::exp(-2 / d0), 0.01);
    EXPECT_GT(small, 1);
    EXPECT_LT(angel_criterion(d0, 0.5 / d0), 1);
    EXPECT_GT(angel_criterion(d0, 1.0 / 3), 1);
    EXPECT_LT(angel_criterion(40, 429.0 / 40), 1);
    EXPECT_THROW(angel_criterion(2, 1), DomainError);
}

TEST(Bounds, ExprMatchesRiemannSum)
{
    const std::vector<std::pair<double, double>> grid{
        {3, 0.5},      {3, 5},        {5, 1},        {10, 0.3},     {10, 2},     {40, 0.03},   {40, 0.05},
        {40, 1},       {40, 10.725},  {100, 0.012},  {100, 0.5},    {300, 0.01}, {500, 0.2},   {1287, 0.5 / 1287},
        {1287, 2.0 / 1287}, {1287, 0.01}, {1287, 1.0 / 3}, {2544, 0.14}, {5000, 0.001}, {10000, 1}};
    // The 1e7-panel midpoint rule is itself accurate to about 2e-8 at the steepest grid point.
    const double tol = 1e-8;
    std::vector<std::future<double>> oracle_values;
    for (auto [d0, T] : grid)
    {
        oracle_values.push_back(std::async(std::launch::async, [d0, T] { return oracle::angel_riemann(d0, T); }));
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        auto [d0, T] = grid[i];
        auto q = angel_criterion_detail(d0, T, tol);
        EXPECT_LE(q.error, tol);
        EXPECT_NEAR(q.value, oracle_values[i].get(), 10 * tol) << d0 << " " << T;
    }
}

TEST(Bounds, CriterionDominatesTwoExponentialBound)
{
    for (double d0 : {40.0, 300.0, 1287.0, 5000.0})
    {
        for (double T = 2 / d0; T <= 429 / d0; T *= 1.1)
        {
            EXPECT_GE(angel_criterion(d0, T), 2 * (std::exp(-T) - std::exp(-T * d0 / 2)) - 1e-9) << d0 << " " << T;
        }
    }
}

TEST(Bounds, MiddleRangeClauseHoldsNumerically)
{
    const double d0 = 1287;
    for (int i = 0; i <= 200; ++i)
    {
        const double T = 2 / d0 + (427 / d0) * i / 200;
        EXPECT_GT(angel_criterion(d0, T), 1) << T;
        EXPECT_FALSE(classify_T(d0, T).expr_discrepancy);
    }
}

TEST(Bounds, ClassifyT)
{
    auto a = classify_T(40, 429.0 / 40);
    EXPECT_EQ(a.verdict, TVerdict::ProvedInfiniteCycles);
    EXPECT_EQ(a.clause, "LemmaB2(3)");
    EXPECT_FALSE(a.expr_discrepancy);
    EXPECT_EQ(classify_T(100, 0.005).verdict, TVerdict::ProvedExcluded);
    EXPECT_EQ(classify_T(100, 0.005).clause, "PercolationExclusion");
    auto c = classify_T(10, 0.5);
    EXPECT_NE(c.clause.rfind("LemmaB2", 0), 0u);
    EXPECT_EQ(c.verdict == TVerdict::ProvedInfiniteCycles, c.clause == "ExprNumeric");
    EXPECT_EQ(classify_T(1287, 0.1).clause, "LemmaB2(2)");
    EXPECT_EQ(classify_T(3000, 0.1).clause, "LemmaB2(2)");
    // The high-degree interval lies inside the union of the two preceding clauses.
    for (double T = 2.0 / 3000 + 1e-6; T <= 0.14; T += 0.001)
    {
        EXPECT_EQ(classify_T(3000, T).clause, T <= 429.0 / 3000 ? "LemmaB2(2)" : "LemmaB2(3)");
    }
    EXPECT_EQ(classify_T(50, 1.0 / 50 + 3.0 / 2500).clause, "LemmaB2(1)");
}

TEST(Bounds, ExclusionPrecedesInclusion)
{
    for (int d0 = 40; d0 <= 5000; d0 += 7)
    {
        const double lo = 1.0 / d0 + 3.0 / (double(d0) * d0);
        EXPECT_LT(percolation_exclusion(d0 - 1), lo);
        EXPECT_NE(classify_T(d0, lo).verdict, TVerdict::ProvedExcluded);
    }
}
