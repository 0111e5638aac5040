#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "erw/model.hpp"
#include "erw/oracle.hpp"
#include "erw/random.hpp"

using namespace erw;

TEST(ProbTriple, AcceptsValidTriple) {
    ProbTriple t(0.25, 0.25, 0.5);
    EXPECT_DOUBLE_EQ(t.p(), 0.25);
    EXPECT_DOUBLE_EQ(t.r(), 0.5);
    EXPECT_EQ(ProbTriple::symmetric(0.5), t);
}

TEST(ProbTriple, RejectsBadSum) {
    try {
        ProbTriple(0.25, 0.24, 0.5);
        FAIL() << "expected InvalidProbabilities";
    } catch (const InvalidProbabilities& e) {
        EXPECT_STREQ(e.what(), "probabilities must sum to 1");
    }
}

TEST(ProbTriple, RejectsBoundaryValues) {
    EXPECT_THROW(ProbTriple(0.0, 0.5, 0.5), InvalidProbabilities);
    EXPECT_THROW(ProbTriple(0.5, 0.5, 0.0), InvalidProbabilities);
    EXPECT_THROW(ProbTriple(1.0, -0.5, 0.5), InvalidProbabilities);
    EXPECT_THROW(ProbTriple(std::nan(""), 0.5, 0.5), InvalidProbabilities);
}

TEST(Step, ConversionRejectsOutOfRange) {
    EXPECT_EQ(to_step(1), Step::up);
    EXPECT_EQ(to_step(0), Step::stay);
    EXPECT_EQ(to_step(-1), Step::down);
    EXPECT_THROW(to_step(2), ModelIntegrityError);
}

TEST(MemoryKernel, ParseRoundTrip) {
    for (const char* name : {"full", "first", "last", "first-last", "window:3"})
        EXPECT_EQ(MemoryKernel::parse(name).name(), name);
    EXPECT_THROW(MemoryKernel::parse("middle"), std::invalid_argument);
    EXPECT_THROW(MemoryKernel::parse("window:0"), std::invalid_argument);
    EXPECT_THROW(MemoryKernel::parse("window:x"), std::invalid_argument);
    EXPECT_THROW(MemoryKernel::last_window(0), std::invalid_argument);
}

TEST(MemoryKernel, MemoryIndices) {
    using V = std::vector<std::int64_t>;
    EXPECT_EQ(MemoryKernel::full().memory_indices(4), (V{1, 2, 3, 4}));
    EXPECT_EQ(MemoryKernel::first_only().memory_indices(4), (V{1}));
    EXPECT_EQ(MemoryKernel::last_only().memory_indices(4), (V{4}));
    EXPECT_EQ(MemoryKernel::first_and_last().memory_indices(1), (V{1}));
    EXPECT_EQ(MemoryKernel::first_and_last().memory_indices(4), (V{1, 4}));
    EXPECT_EQ(MemoryKernel::last_window(3).memory_indices(2), (V{1, 2}));
    EXPECT_EQ(MemoryKernel::last_window(3).memory_indices(7), (V{5, 6, 7}));
    EXPECT_EQ(MemoryKernel::last_window(1).memory_indices(7), MemoryKernel::last_only().memory_indices(7));
}

TEST(WindowMemory, RingBufferKeepsOldestFirst) {
    WindowMemory w(3);
    for (Step s : {Step::up, Step::stay, Step::down, Step::up}) w.push(s);
    EXPECT_EQ(w.size(), 3);
    EXPECT_EQ(w.steps(), (std::vector<Step>{Step::stay, Step::down, Step::up}));
    EXPECT_EQ(w.nonzero(), 2);
    EXPECT_EQ(w.signed_sum(), 0);
}

TEST(StepLaw, FirstStepLaw) {
    const ProbTriple t(0.6, 0.1, 0.3);
    const auto law = first_step_law(t);
    EXPECT_DOUBLE_EQ(law.up, 0.6);
    EXPECT_DOUBLE_EQ(law.down, 0.1);
    EXPECT_DOUBLE_EQ(law.stay, 0.3);
}

TEST(StepLaw, RejectsInconsistentStatistic) {
    const auto t = ProbTriple::symmetric(0.5);
    EXPECT_THROW(step_law({2, 3, 0}, t), ModelIntegrityError);
    EXPECT_THROW(step_law({2, 1, 2}, t), ModelIntegrityError);
    EXPECT_THROW(step_law({2, 2, 1}, t), ModelIntegrityError);
    EXPECT_THROW(step_law({0, 0, 0}, t), ModelIntegrityError);
    EXPECT_THROW(step_distribution(initial_state(MemoryKernel::full()), MemoryKernel::full(), t),
                 ModelIntegrityError);
    auto s = advance(initial_state(MemoryKernel::full()), Step::up, MemoryKernel::full());
    EXPECT_THROW(step_distribution(s, MemoryKernel::last_only(), t), ModelIntegrityError);
    EXPECT_THROW(advance(s, Step::up, MemoryKernel::last_window(2)), ModelIntegrityError);
}

// The sufficient statistic gives the same law as averaging over the literal
// remembered index set, for every history up to length 6.
TEST(StepLaw, SufficiencyAgainstFullHistory) {
    const ProbTriple params(0.55, 0.15, 0.3);
    for (const char* name : {"full", "first", "last", "first-last", "window:1", "window:3"}) {
        const auto kernel = MemoryKernel::parse(name);
        std::vector<Step> history;
        std::function<void(const WalkState&)> visit = [&](const WalkState& state) {
            const auto a = step_distribution(state, kernel, params);
            const auto b = oracle::reference::history_step_law(kernel, history, params);
            ASSERT_NEAR(a.up, b.up, 1e-15) << name;
            ASSERT_NEAR(a.down, b.down, 1e-15) << name;
            ASSERT_NEAR(a.stay, b.stay, 1e-15) << name;
            ASSERT_NEAR(a.up + a.down + a.stay, 1.0, 1e-15);
            if (history.size() == 6) return;
            for (Step s : {Step::down, Step::stay, Step::up}) {
                history.push_back(s);
                visit(advance(state, s, kernel));
                history.pop_back();
            }
        };
        for (Step s : {Step::down, Step::stay, Step::up}) {
            history = {s};
            visit(advance(initial_state(kernel), s, kernel));
        }
    }
}

TEST(Advance, CountsAndPosition) {
    const auto k = MemoryKernel::first_and_last();
    auto s = initial_state(k);
    for (Step x : {Step::up, Step::stay, Step::up, Step::down, Step::stay}) s = advance(s, x, k);
    EXPECT_EQ(s.n, 5);
    EXPECT_EQ(s.position, 1);
    EXPECT_EQ(s.zeros, 2);
    EXPECT_EQ(s.nonzeros, 3);
    const auto m = summarize(s);
    EXPECT_EQ(m.size, 2);
    EXPECT_EQ(m.nonzero, 1);
    EXPECT_EQ(m.signed_sum, 1);
}

TEST(CheckpointGrid, PowersOfTwoPlusEnd) {
    EXPECT_EQ(checkpoint_grid(8), (std::vector<std::int64_t>{1, 2, 4, 8}));
    EXPECT_EQ(checkpoint_grid(10), (std::vector<std::int64_t>{1, 2, 4, 8, 10}));
    EXPECT_EQ(checkpoint_grid(3, true), (std::vector<std::int64_t>{1, 2, 3}));
    EXPECT_TRUE(checkpoint_grid(0).empty());
}

TEST(SimulatePath, DeterministicAndConsistent) {
    const auto params = ProbTriple(0.5, 0.2, 0.3);
    for (const char* name : {"full", "first", "last", "first-last", "window:4"}) {
        const auto kernel = MemoryKernel::parse(name);
        const auto grid = checkpoint_grid(500, true);
        const auto a = simulate_path(kernel, params, 500, 42, grid, 3);
        const auto b = simulate_path(kernel, params, 500, 42, grid, 3);
        EXPECT_EQ(a, b);
        for (const auto& snap : a.snapshots) {
            EXPECT_EQ(snap.zeros + snap.nonzeros, snap.n);
            EXPECT_LE(std::abs(snap.position), snap.nonzeros);
            EXPECT_EQ((snap.position - snap.nonzeros) % 2, 0);
        }
        EXPECT_EQ(a.snapshots.front().nonzeros, is_nonzero(a.first) ? 1 : 0);
        EXPECT_NE(a, simulate_path(kernel, params, 500, 42, grid, 4));
    }
}

TEST(SimulatePath, ZeroFirstStepFreezesFirstOnly) {
    const auto params = ProbTriple::symmetric(0.5);
    int frozen = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        const auto t = simulate_path(MemoryKernel::first_only(), params, 100, 9, checkpoint_grid(100), rep);
        if (t.first == Step::stay) {
            ++frozen;
            EXPECT_EQ(t.snapshots.back().nonzeros, 0);
        }
    }
    EXPECT_GT(frozen, 0);
}

TEST(SimulatePath, WindowOfOneMatchesLastOnly) {
    const auto params = ProbTriple(0.4, 0.3, 0.3);
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        const auto grid = checkpoint_grid(300, true);
        EXPECT_EQ(simulate_path(MemoryKernel::last_window(1), params, 300, 5, grid, rep),
                  simulate_path(MemoryKernel::last_only(), params, 300, 5, grid, rep));
    }
}

TEST(SimulatePath, RejectsBadArguments) {
    const auto params = ProbTriple::symmetric(0.5);
    EXPECT_THROW(simulate_path(MemoryKernel::full(), params, 0, 1), std::invalid_argument);
    const std::vector<std::int64_t> bad{4, 2};
    EXPECT_THROW(simulate_path(MemoryKernel::full(), params, 8, 1, bad), std::invalid_argument);
    const std::vector<std::int64_t> beyond{16};
    EXPECT_THROW(simulate_path(MemoryKernel::full(), params, 8, 1, beyond), std::invalid_argument);
}

TEST(FirstStep, EmpiricalFrequencies) {
    const ProbTriple t(0.6, 0.1, 0.3);
    auto rng = Xoshiro256::stream(17, 0);
    const int draws = 200000;
    int up = 0, down = 0;
    for (int i = 0; i < draws; ++i) {
        const Step s = first_step(t, rng);
        up += s == Step::up;
        down += s == Step::down;
    }
    EXPECT_NEAR(up / double(draws), 0.6, 4 * std::sqrt(0.24 / draws));
    EXPECT_NEAR(down / double(draws), 0.1, 4 * std::sqrt(0.09 / draws));
}

TEST(Random, SplitMixReferenceValue) {
    SplitMix64 sm(0);
    EXPECT_EQ(sm(), 0xe220a8397b1dcdafULL);
}

TEST(Random, StreamsAreReproducibleAndDistinct) {
    auto a = Xoshiro256::stream(1, 0), b = Xoshiro256::stream(1, 0), c = Xoshiro256::stream(1, 1);
    bool differ = false;
    for (int i = 0; i < 16; ++i) {
        const auto x = a(), y = b(), z = c();
        EXPECT_EQ(x, y);
        differ = differ || x != z;
    }
    EXPECT_TRUE(differ);
    auto d = Xoshiro256::stream(3, 7);
    for (int i = 0; i < 1000; ++i) {
        const double u = d.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}
