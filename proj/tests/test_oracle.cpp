#include <gtest/gtest.h>

#include <cmath>

#include "erw/analytics.hpp"
#include "erw/oracle.hpp"

using namespace erw;

namespace {

const std::vector<MemoryKernel> all_kernels = {MemoryKernel::full(), MemoryKernel::first_only(),
                                               MemoryKernel::last_only(), MemoryKernel::first_and_last(),
                                               MemoryKernel::last_window(2), MemoryKernel::last_window(3)};

}  // namespace

TEST(Oracle, FullSmallPmf) {
    const auto pmf = oracle::exact_distribution(MemoryKernel::full(), 3, 0.5);
    const std::vector<double> expected{0.5, 0.1875, 0.1875, 0.125};
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(pmf.probs[i], expected[i], 1e-15);

    const auto exact = oracle::exact_distribution(MemoryKernel::full(), 3, Rational(1, 2));
    EXPECT_EQ(exact.probs, (std::vector<Rational>{Rational(1, 2), Rational(3, 16), Rational(3, 16), Rational(1, 8)}));
}

TEST(Oracle, RationalTotalsAreExactlyOne) {
    for (const auto& k : all_kernels)
        for (std::int64_t n : {1, 5, 12})
            EXPECT_EQ(oracle::exact_distribution(k, n, Rational(2, 7)).total(), Rational(1)) << k.name();
}

TEST(Oracle, FullMatchesClosedForms) {
    for (double r : {0.2, 0.5, 0.8}) {
        for (std::int64_t n = 1; n <= 14; ++n) {
            const auto pmf = oracle::exact_distribution(MemoryKernel::full(), n, Rational(r));
            EXPECT_NEAR(to_double(pmf.mean()), analytics::full_mean(n, r), 1e-12 * n);
            EXPECT_NEAR(to_double(pmf.moment(2)), analytics::full_second_moment(n, r), 1e-12 * n * n);
        }
    }
}

TEST(Oracle, LastOnlyIsTruncatedGeometric) {
    for (double r : {0.3, 0.5}) {
        const auto pmf = oracle::exact_distribution(MemoryKernel::last_only(), 12, r);
        const auto geo = analytics::geometric_law(12, r);
        EXPECT_LT(total_variation(pmf, geo), 1e-15);
    }
    const auto last = oracle::exact_distribution(MemoryKernel::last_only(), 3, Rational(1, 2));
    EXPECT_EQ(last.probs, (std::vector<Rational>{Rational(1, 2), Rational(1, 4), Rational(1, 8), Rational(1, 8)}));
}

TEST(Oracle, MomentTablesAgree) {
    const double r = 0.35;
    for (const auto& k : {MemoryKernel::full(), MemoryKernel::first_only(), MemoryKernel::last_only()}) {
        const auto t = analytics::moment_table(k, 14, r);
        for (const auto& row : t.rows) {
            EXPECT_NEAR(oracle::exact_moment(k, row.n, r, 1), row.mean, 1e-12) << k.name() << row.n;
            EXPECT_NEAR(oracle::exact_moment(k, row.n, r, 2), row.second, 1e-11) << k.name() << row.n;
        }
    }
    const auto t = analytics::moment_table(MemoryKernel::first_and_last(), 14, r);
    for (const auto& row : t.rows) {
        EXPECT_NEAR(oracle::exact_moment(MemoryKernel::first_and_last(), row.n, r, 1, true), row.mean, 1e-12);
        EXPECT_NEAR(oracle::exact_moment(MemoryKernel::first_and_last(), row.n, r, 2, true), row.second, 1e-11);
    }
}

TEST(Oracle, MixedMomentOfFirstAndLast) {
    // E(N*_n I*_n | I*_1 = 1) from the chain states.
    const double r = 0.5;
    for (std::int64_t n = 1; n <= 14; ++n) {
        oracle::IndicatorChain<Rational> chain(MemoryKernel::first_and_last(), Rational(1, 2));
        chain.run_to(n);
        Rational p1(0), e(0);
        for (const auto& [key, prob] : chain.states()) {
            if (!key.first) continue;
            p1 += prob;
            if (key.recent & 1u) e += prob * key.count;
        }
        EXPECT_NEAR(to_double(Rational(e / p1)), analytics::mixed_kernel_moments(n, r).count_indicator, 1e-13);
    }
}

// The count law depends on (p, q, r) only through r.
TEST(Oracle, InvariantToSignSplit) {
    for (const auto& k : all_kernels) {
        for (const auto& params : {ProbTriple(0.1, 0.6, 0.3), ProbTriple(0.6, 0.1, 0.3), ProbTriple(0.35, 0.35, 0.3)}) {
            const auto brute = oracle::reference::exact_distribution_signed(k, 7, params);
            const auto dp = oracle::exact_distribution(k, 7, 0.3);
            EXPECT_LT(total_variation(brute, dp), 1e-14) << k.name();
        }
    }
}

TEST(Oracle, Budgets) {
    EXPECT_THROW(oracle::exact_distribution(MemoryKernel::full(), 25, 0.5), BudgetError);
    EXPECT_THROW(oracle::exact_distribution(MemoryKernel::last_window(9), 5, 0.5), BudgetError);
    EXPECT_THROW(oracle::exact_distribution(MemoryKernel::last_window(3), 21, 0.5), BudgetError);
    EXPECT_THROW(oracle::reference::exact_distribution_signed(MemoryKernel::full(), 11, ProbTriple::symmetric(0.5)),
                 BudgetError);
    EXPECT_THROW(oracle::exact_distribution(MemoryKernel::full(), 0, 0.5), std::invalid_argument);
    EXPECT_THROW(oracle::IndicatorChain<double>(MemoryKernel::full(), 1.0), std::domain_error);
    EXPECT_NO_THROW(oracle::exact_distribution(MemoryKernel::full(), 24, 0.5));
}

TEST(Oracle, MartingaleIdentity) {
    for (double r : {0.2, 0.5, 0.8}) EXPECT_LE(oracle::martingale_check(12, r), 1e-12);
    EXPECT_EQ(oracle::martingale_check(12, Rational(1, 2)), 0.0);
    EXPECT_EQ(oracle::martingale_check(12, Rational(1, 5)), 0.0);
    EXPECT_GT(oracle::martingale_check(12, 0.5, 0.3), 1e-3);
    EXPECT_THROW(oracle::martingale_check(21, 0.5), BudgetError);
}

TEST(Oracle, Correlation) {
    EXPECT_THROW(oracle::correlation(MemoryKernel::full(), 1, 0.5), DegenerateError);
    // First only: I*_n, I*_{n+1} are conditionally independent given I*_1.
    EXPECT_NEAR(oracle::correlation(MemoryKernel::first_only(), 5, 0.5), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(oracle::correlation(MemoryKernel::first_only(), 5, 0.2), 0.8 / 1.8, 1e-14);
}

TEST(Oracle, Absorption) {
    for (std::int64_t n = 1; n <= 10; ++n)
        EXPECT_NEAR(oracle::absorption_probability(MemoryKernel::last_only(), n, 0.3), 1 - std::pow(0.7, n), 1e-14);
    double prev = 0.0;
    for (std::int64_t n = 1; n <= 20; ++n) {
        const double a = oracle::absorption_probability(MemoryKernel::last_window(3), n, 0.3);
        EXPECT_GE(a, prev - 1e-15);
        prev = a;
    }
    EXPECT_DOUBLE_EQ(oracle::absorption_probability(MemoryKernel::full(), 10, 0.3), 0.3);
}
