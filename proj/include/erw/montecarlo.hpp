#pragma once

// Deterministic parallel ensembles with streaming summaries.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "erw/error.hpp"
#include "erw/model.hpp"

namespace erw::montecarlo {

//---------------------------------------------------------------------------//
// One-pass mean/variance with a symmetric pairwise merge.
struct RunningStats {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();

    void push(double x) noexcept {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
        min = std::min(min, x);
        max = std::max(max, x);
    }

    // Commutative bit-for-bit: every expression is symmetric in (a, b).
    static RunningStats merge(const RunningStats& a, const RunningStats& b) noexcept {
        if (a.count == 0) return b;
        if (b.count == 0) return a;
        RunningStats out;
        out.count = a.count + b.count;
        const double na = static_cast<double>(a.count);
        const double nb = static_cast<double>(b.count);
        const double n = static_cast<double>(out.count);
        const double delta = b.mean - a.mean;
        out.mean = (na * a.mean + nb * b.mean) / n;
        out.m2 = a.m2 + b.m2 + delta * delta * (na * nb / n);
        out.min = std::min(a.min, b.min);
        out.max = std::max(a.max, b.max);
        return out;
    }

    double variance() const noexcept {
        return count > 1 ? std::max(0.0, m2 / static_cast<double>(count - 1)) : 0.0;
    }
    double std_error() const noexcept {
        return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
    }
};

/*!
 * Fixed bins of width 0.1 on [-6, 6] plus under/overflow. Exact zeros go to
 * their own bucket and are never binned, so a point mass at 0 stays separate
 * from the continuous part.
 */
struct Histogram {
    static constexpr double lo = -6.0;
    static constexpr double hi = 6.0;
    static constexpr double width = 0.1;
    static constexpr std::size_t bins = 120;

    std::array<std::int64_t, bins> counts{};
    std::int64_t underflow = 0;
    std::int64_t overflow = 0;
    std::int64_t exact_zero = 0;

    void push(double x) noexcept {
        if (x == 0.0) {
            ++exact_zero;
        } else if (x < lo) {
            ++underflow;
        } else if (x >= hi) {
            ++overflow;
        } else {
            auto i = static_cast<std::size_t>((x - lo) / width);
            counts[std::min(i, bins - 1)]++;
        }
    }

    std::int64_t total() const noexcept {
        std::int64_t t = underflow + overflow + exact_zero;
        for (auto c : counts) t += c;
        return t;
    }

    static Histogram merge(const Histogram& a, const Histogram& b) noexcept {
        Histogram out;
        for (std::size_t i = 0; i < bins; ++i) out.counts[i] = a.counts[i] + b.counts[i];
        out.underflow = a.underflow + b.underflow;
        out.overflow = a.overflow + b.overflow;
        out.exact_zero = a.exact_zero + b.exact_zero;
        return out;
    }

    friend bool operator==(const Histogram&, const Histogram&) = default;
};

// Recorded functionals of N*_n at one checkpoint, for one branch.
struct FunctionalStats {
    RunningStats count;     // N*_n
    RunningStats fraction;  // N*_n / n
    RunningStats scaled;    // N*_n / n^{1-r}
    RunningStats centered;  // (N*_n - centering) / sqrt(n)
    Histogram centered_hist;

    static FunctionalStats merge(const FunctionalStats& a, const FunctionalStats& b) noexcept {
        return {RunningStats::merge(a.count, b.count), RunningStats::merge(a.fraction, b.fraction),
                RunningStats::merge(a.scaled, b.scaled), RunningStats::merge(a.centered, b.centered),
                Histogram::merge(a.centered_hist, b.centered_hist)};
    }
};

struct CheckpointSummary {
    std::int64_t n = 0;
    FunctionalStats all;
    FunctionalStats first_zero;     // branch I*_1 = 0
    FunctionalStats first_nonzero;  // branch I*_1 = 1

    static CheckpointSummary merge(const CheckpointSummary& a, const CheckpointSummary& b) noexcept {
        return {a.n, FunctionalStats::merge(a.all, b.all),
                FunctionalStats::merge(a.first_zero, b.first_zero),
                FunctionalStats::merge(a.first_nonzero, b.first_nonzero)};
    }
};

// Per-replicate N*_n at every checkpoint, row-major by replicate.
struct Trajectories {
    std::vector<std::int64_t> checkpoints;
    std::vector<std::uint8_t> first_nonzero;
    std::vector<std::int32_t> nonzeros;

    std::int64_t replicates() const noexcept { return static_cast<std::int64_t>(first_nonzero.size()); }
    std::int32_t at(std::int64_t replicate, std::size_t checkpoint) const {
        return nonzeros[static_cast<std::size_t>(replicate) * checkpoints.size() + checkpoint];
    }
};

struct EnsembleSpec {
    MemoryKernel kernel = MemoryKernel::full();
    ProbTriple params = ProbTriple::symmetric(0.5);
    std::int64_t horizon = 1;
    std::int64_t replicates = 1;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> checkpoints;  // empty: powers of two up to horizon
    bool keep_trajectories = false;
    unsigned workers = 0;                   // 0: ERW_THREADS, else hardware concurrency
    std::int64_t max_total_steps = 0;       // 0: unlimited
};

struct EnsembleSummary {
    MemoryKernel kernel = MemoryKernel::full();
    ProbTriple params = ProbTriple::symmetric(0.5);
    std::int64_t horizon = 0;
    std::uint64_t seed = 0;
    std::int64_t requested_replicates = 0;
    std::int64_t completed_replicates = 0;
    bool partial = false;
    std::vector<CheckpointSummary> checkpoints;
    std::optional<Trajectories> trajectories;

    const CheckpointSummary& at(std::int64_t n) const {
        for (const auto& c : checkpoints)
            if (c.n == n) return c;
        throw std::out_of_range("no checkpoint at n = " + std::to_string(n));
    }
};

// Deterministic centering used by the centered functional: the CLT centerings
// n(1-r) I*_1 (first only) and n(1-r)/(1+r) I*_1 (first and last); zero for
// the other kernels.
inline double centering(const MemoryKernel& kernel, double r, std::int64_t n, bool first_nonzero) {
    if (!first_nonzero) return 0.0;
    const auto nn = static_cast<double>(n);
    switch (kernel.kind()) {
    case KernelKind::first_only: return nn * (1.0 - r);
    case KernelKind::first_and_last: return nn * (1.0 - r) / (1.0 + r);
    default: return 0.0;
    }
}

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ERW_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

inline constexpr std::int64_t block_size = 1024;

struct CheckpointScales {
    std::int64_t n;
    double inv_n;
    double inv_power;  // n^{-(1-r)}
    double inv_sqrt;
};

inline std::vector<CheckpointSummary> run_block(const EnsembleSpec& spec,
                                                const std::vector<std::int64_t>& grid,
                                                const std::vector<CheckpointScales>& scales,
                                                std::int64_t begin, std::int64_t end,
                                                Trajectories* traj) {
    std::vector<CheckpointSummary> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i].n = grid[i];
    const double r = spec.params.r();
    std::vector<std::int64_t> counts(grid.size());
    for (std::int64_t rep = begin; rep < end; ++rep) {
        auto rng = Xoshiro256::stream(spec.seed, static_cast<std::uint64_t>(rep));
        std::size_t ci = 0;
        const Step first = run_walk(spec.kernel, spec.params, spec.horizon, rng, grid,
                                    [&](const WalkState& s) { counts[ci++] = s.nonzeros; });
        const bool branch = is_nonzero(first);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto& sc = scales[i];
            const auto c = static_cast<double>(counts[i]);
            const double fraction = c * sc.inv_n;
            const double scaled = c * sc.inv_power;
            const double centered = (c - centering(spec.kernel, r, sc.n, branch)) * sc.inv_sqrt;
            for (FunctionalStats* f : {&out[i].all, branch ? &out[i].first_nonzero : &out[i].first_zero}) {
                f->count.push(c);
                f->fraction.push(fraction);
                f->scaled.push(scaled);
                f->centered.push(centered);
                f->centered_hist.push(centered);
            }
        }
        if (traj != nullptr) {
            traj->first_nonzero[static_cast<std::size_t>(rep)] = branch;
            for (std::size_t i = 0; i < grid.size(); ++i)
                traj->nonzeros[static_cast<std::size_t>(rep) * grid.size() + i] =
                    static_cast<std::int32_t>(counts[i]);
        }
    }
    return out;
}

// Pairwise reduction in index order: the tree shape depends only on the
// number of blocks.
inline std::vector<CheckpointSummary> reduce(std::vector<std::vector<CheckpointSummary>> parts) {
    while (parts.size() > 1) {
        std::vector<std::vector<CheckpointSummary>> next;
        next.reserve((parts.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
            std::vector<CheckpointSummary> merged(parts[i].size());
            for (std::size_t c = 0; c < merged.size(); ++c)
                merged[c] = CheckpointSummary::merge(parts[i][c], parts[i + 1][c]);
            next.push_back(std::move(merged));
        }
        if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
        parts = std::move(next);
    }
    return parts.empty() ? std::vector<CheckpointSummary>{} : std::move(parts.front());
}

}  // namespace detail

/*!
 * Runs `spec.replicates` independent paths. Replicate k uses
 * Xoshiro256::stream(seed, k); replicates are processed in fixed blocks and
 * reduced in block order, so the summary is bit-identical for any worker
 * count. A step budget smaller than replicates * horizon runs only the
 * affordable prefix of replicates and sets `partial`.
 */
inline EnsembleSummary run_ensemble(const EnsembleSpec& spec) {
    if (spec.horizon < 1) throw std::invalid_argument("run_ensemble: horizon must be at least 1");
    if (spec.replicates < 1) throw std::invalid_argument("run_ensemble: replicates must be at least 1");
    std::vector<std::int64_t> grid = spec.checkpoints.empty() ? checkpoint_grid(spec.horizon) : spec.checkpoints;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.front() < 1 || grid.back() > spec.horizon)
        throw std::invalid_argument("run_ensemble: checkpoints must lie in [1, horizon]");

    std::int64_t replicates = spec.replicates;
    bool partial = false;
    if (spec.max_total_steps > 0 && replicates > spec.max_total_steps / spec.horizon) {
        replicates = spec.max_total_steps / spec.horizon;
        if (replicates < 1) throw BudgetError("run_ensemble: step budget smaller than one path");
        partial = true;
    }

    const double r = spec.params.r();
    std::vector<detail::CheckpointScales> scales;
    for (auto n : grid) {
        const auto nn = static_cast<double>(n);
        scales.push_back({n, 1.0 / nn, 1.0 / std::pow(nn, 1.0 - r), 1.0 / std::sqrt(nn)});
    }

    EnsembleSummary summary;
    summary.kernel = spec.kernel;
    summary.params = spec.params;
    summary.horizon = spec.horizon;
    summary.seed = spec.seed;
    summary.requested_replicates = spec.replicates;
    summary.completed_replicates = replicates;
    summary.partial = partial;

    Trajectories* traj = nullptr;
    if (spec.keep_trajectories) {
        summary.trajectories.emplace();
        summary.trajectories->checkpoints = grid;
        summary.trajectories->first_nonzero.assign(static_cast<std::size_t>(replicates), 0);
        summary.trajectories->nonzeros.assign(static_cast<std::size_t>(replicates) * grid.size(), 0);
        traj = &*summary.trajectories;
    }

    const std::int64_t blocks = (replicates + detail::block_size - 1) / detail::block_size;
    std::vector<std::vector<CheckpointSummary>> parts(static_cast<std::size_t>(blocks));
    std::atomic<std::int64_t> next_block{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::int64_t b = next_block++; b < blocks; b = next_block++) {
                const std::int64_t begin = b * detail::block_size;
                const std::int64_t end = std::min(replicates, begin + detail::block_size);
                parts[static_cast<std::size_t>(b)] = detail::run_block(spec, grid, scales, begin, end, traj);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    const unsigned workers =
        static_cast<unsigned>(std::min<std::int64_t>(resolve_workers(spec.workers), blocks));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    summary.checkpoints = detail::reduce(std::move(parts));
    return summary;
}

//---------------------------------------------------------------------------//
struct BranchSummary {
    double weight = 0.0;  // share of completed replicates in this branch
    std::vector<std::pair<std::int64_t, FunctionalStats>> checkpoints;

    const FunctionalStats& at(std::int64_t n) const {
        for (const auto& [k, f] : checkpoints)
            if (k == n) return f;
        throw std::out_of_range("no checkpoint at n = " + std::to_string(n));
    }
};

struct BranchSplit {
    BranchSummary first_zero;
    BranchSummary first_nonzero;
};

// Conditional summaries on I*_1 = 0 and I*_1 = 1.
inline BranchSplit branch_split(const EnsembleSummary& summary) {
    if (summary.checkpoints.empty()) throw DegenerateError("branch_split: empty summary");
    BranchSplit out;
    const auto& any = summary.checkpoints.front();
    const auto total = static_cast<double>(any.all.count.count);
    if (any.first_zero.count.count == 0 || any.first_nonzero.count.count == 0)
        throw DegenerateError("branch_split: a branch has no replicates");
    out.first_zero.weight = static_cast<double>(any.first_zero.count.count) / total;
    out.first_nonzero.weight = static_cast<double>(any.first_nonzero.count.count) / total;
    for (const auto& c : summary.checkpoints) {
        out.first_zero.checkpoints.emplace_back(c.n, c.first_zero);
        out.first_nonzero.checkpoints.emplace_back(c.n, c.first_nonzero);
    }
    return out;
}

}  // namespace erw::montecarlo
