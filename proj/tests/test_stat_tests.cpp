#include <gtest/gtest.h>

#include <random>

#include "erw/montecarlo.hpp"
#include "erw/random.hpp"
#include "erw/stat_tests.hpp"

using namespace erw;
using namespace erw::stat_tests;

namespace {

bool all_pass(const std::vector<TestReport>& reps) {
    for (const auto& r : reps)
        if (!r.pass) return false;
    return true;
}

}  // namespace

TEST(StatTests, NormalSelfCalibration) {
    int passes = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        auto rng = Xoshiro256::stream(1, rep);
        std::normal_distribution<double> d(1.0, 2.0);
        std::vector<double> xs(2000);
        for (auto& x : xs) x = d(rng);
        passes += all_pass(ks_against(NormalLaw{1.0, 4.0}, xs));
    }
    EXPECT_GE(passes, 90);
}

TEST(StatTests, MixtureSelfCalibration) {
    int passes = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        auto rng = Xoshiro256::stream(2, rep);
        std::normal_distribution<double> d(0.0, 0.5);
        std::bernoulli_distribution atom(0.4);
        std::vector<double> xs(4000);
        for (auto& x : xs) x = atom(rng) ? 0.0 : d(rng);
        const auto reps = ks_against(MixtureLaw{0.25, 0.4}, xs);
        ASSERT_EQ(reps.size(), 2u);
        passes += all_pass(reps);
    }
    EXPECT_GE(passes, 90);
}

TEST(StatTests, GeometricSelfCalibration) {
    int passes = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        auto rng = Xoshiro256::stream(3, rep);
        std::geometric_distribution<std::int64_t> d(0.5);
        std::vector<std::int64_t> xs(2000);
        for (auto& x : xs) x = d(rng);
        const auto reps = chi_square_geometric(xs, 0.5, 64);
        passes += all_pass(reps);
    }
    EXPECT_GE(passes, 90);
}

TEST(StatTests, GeometricKsSelfCalibration) {
    int passes = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        auto rng = Xoshiro256::stream(4, rep);
        std::geometric_distribution<std::int64_t> d(0.3);
        std::vector<double> xs(2000);
        for (auto& x : xs) x = static_cast<double>(d(rng));
        passes += all_pass(ks_against(GeometricLaw{0.3}, xs));
    }
    EXPECT_GE(passes, 90);
}

TEST(StatTests, NegativeControls) {
    std::vector<std::int64_t> zeros(5000, 0);
    EXPECT_FALSE(chi_square_geometric(zeros, 0.5, 64)[0].pass);

    auto rng = Xoshiro256::stream(5, 0);
    std::normal_distribution<double> d(0.3, 1.0);
    std::vector<double> xs(5000);
    for (auto& x : xs) x = d(rng);
    EXPECT_FALSE(ks_against(NormalLaw{0.0, 1.0}, xs)[0].pass);

    std::vector<double> atoms(5000, 0.0);
    for (std::size_t i = 0; i < 1000; ++i) atoms[i] = d(rng);
    EXPECT_FALSE(ks_against(MixtureLaw{1.0, 0.4}, atoms)[0].pass);
}

TEST(StatTests, ConstantLaw) {
    std::vector<double> xs(2000, 1.5);
    EXPECT_TRUE(ks_against(ConstantLaw{1.5}, xs)[0].pass);
    xs[0] = xs[1] = 0.0;
    const auto rep = ks_against(ConstantLaw{1.5}, xs)[0];
    EXPECT_DOUBLE_EQ(rep.value, 0.001);
}

TEST(StatTests, Preconditions) {
    std::vector<double> small(999, 0.0);
    EXPECT_THROW(ks_against(NormalLaw{}, small), InsufficientSamples);
    std::vector<std::int64_t> counts(5000, 1);
    EXPECT_THROW(chi_square_geometric(counts, 0.5, 10), std::invalid_argument);
    EXPECT_THROW(chi_square_geometric(counts, 1.0, 100), std::domain_error);
}

// Binomial counts sit on a lattice of spacing 1/sqrt(n). Without the
// continuity correction the lattice alone pushes KS past the critical value.
TEST(StatTests, LatticeContinuityCorrection) {
    const std::int64_t n = 10000;
    auto rng = Xoshiro256::stream(6, 0);
    std::binomial_distribution<std::int64_t> d(n, 0.5);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = (static_cast<double>(d(rng)) - n / 2.0) / 100.0;
    const auto corrected = ks_against(NormalLaw{0.0, 0.25}, xs, {.lattice_step = 0.01})[0];
    const auto raw = ks_against(NormalLaw{0.0, 0.25}, xs)[0];
    EXPECT_TRUE(corrected.pass) << corrected.value;
    EXPECT_GT(raw.value, corrected.value);
    EXPECT_GT(raw.value, 0.0035);
}

TEST(StatTests, HistogramOverload) {
    auto rng = Xoshiro256::stream(7, 0);
    std::normal_distribution<double> d(0.0, 1.0);
    montecarlo::Histogram h;
    for (int i = 0; i < 50000; ++i) h.push(d(rng));
    EXPECT_TRUE(ks_against(NormalLaw{0.0, 1.0}, h)[0].pass);
    EXPECT_FALSE(ks_against(NormalLaw{0.0, 1.5}, h)[0].pass);
    EXPECT_THROW(ks_against(GeometricLaw{0.5}, h), std::invalid_argument);
}

TEST(StatTests, ConvergenceTrack) {
    std::vector<std::pair<std::int64_t, double>> series{{16, 0.7}, {32, 0.6}, {64, 0.55}, {128, 0.5}};
    const auto rep = convergence_track(series, 0.5, 0.01);
    EXPECT_EQ(rep.value, 0.0);
    EXPECT_TRUE(rep.pass);
    EXPECT_NE(rep.detail.find("monotone"), std::string::npos);
    EXPECT_EQ(rep.detail.find("not monotone"), std::string::npos);
    series.pop_back();
    EXPECT_THROW(convergence_track(series, 0.5, 0.01), std::invalid_argument);
}

TEST(StatTests, GapHelpers) {
    montecarlo::RunningStats s;
    for (int i = 0; i < 1000; ++i) s.push(i % 2 == 0 ? 1.0 : 3.0);
    EXPECT_TRUE(mean_gap("m", s, 2.0).pass);
    EXPECT_FALSE(mean_gap("m", s, 2.5).pass);
    EXPECT_TRUE(variance_gap("v", s, 1.0).pass);
    EXPECT_FALSE(variance_gap("v", s, 2.0).pass);
    EXPECT_TRUE(standard_error_gap("z", 1.0, 0.1, 1.25).pass);
    EXPECT_FALSE(standard_error_gap("z", 1.0, 0.1, 1.35).pass);
    EXPECT_TRUE(relative_gap("rel", Statistic::mean_gap, 1.01, 1.0, 0.015).pass);
}

TEST(StatTests, MartingaleTail) {
    montecarlo::EnsembleSpec spec;
    spec.kernel = MemoryKernel::full();
    spec.params = ProbTriple::symmetric(0.5);
    spec.horizon = 2048;
    spec.replicates = 20000;
    spec.seed = 99;
    spec.keep_trajectories = true;
    spec.workers = 1;
    const auto sum = montecarlo::run_ensemble(spec);
    EXPECT_TRUE(all_pass(martingale_tail_check(*sum.trajectories, 0.5)));
    // Scalers built from the wrong r: the mean drifts away from 1 - r.
    EXPECT_FALSE(martingale_tail_check(*sum.trajectories, 0.5, 0.3)[0].pass);
}
