#pragma once

// Elephant random walk with delays: step rule, memory kernels, sufficient
// statistics and single-path simulation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "erw/error.hpp"
#include "erw/random.hpp"

namespace erw {

enum class Step : std::int8_t { down = -1, stay = 0, up = 1 };

constexpr int value(Step s) noexcept { return static_cast<int>(s); }
constexpr bool is_nonzero(Step s) noexcept { return s != Step::stay; }

inline Step to_step(int v) {
    if (v < -1 || v > 1) throw ModelIntegrityError("step value must be -1, 0 or +1");
    return static_cast<Step>(v);
}

//---------------------------------------------------------------------------//
// Step-choice law: copy the remembered step (p), flip it (q), or stay (r).
class ProbTriple {
  public:
    static constexpr double sum_tolerance = 1e-12;

    ProbTriple(double p, double q, double r) : p_(p), q_(q), r_(r) {
        for (double x : {p, q, r}) {
            if (!(x > 0.0 && x < 1.0))
                throw InvalidProbabilities("probabilities must lie strictly between 0 and 1");
        }
        if (std::abs(p + q + r - 1.0) > sum_tolerance)
            throw InvalidProbabilities("probabilities must sum to 1");
    }

    // p = q = (1 - r) / 2.
    static ProbTriple symmetric(double r) { return {(1.0 - r) / 2.0, (1.0 - r) / 2.0, r}; }

    double p() const noexcept { return p_; }
    double q() const noexcept { return q_; }
    double r() const noexcept { return r_; }

    friend bool operator==(const ProbTriple&, const ProbTriple&) = default;

  private:
    double p_, q_, r_;
};

//---------------------------------------------------------------------------//
enum class KernelKind { full, first_only, last_only, first_and_last, last_window };

/*!
 * Which past step indices the walker may copy from after n steps:
 * full {1..n}, first_only {1}, last_only {n}, first_and_last {1, n},
 * last_window(m) {n-m+1..n} (clipped at 1).
 */
class MemoryKernel {
  public:
    static MemoryKernel full() { return MemoryKernel(KernelKind::full, 0); }
    static MemoryKernel first_only() { return MemoryKernel(KernelKind::first_only, 0); }
    static MemoryKernel last_only() { return MemoryKernel(KernelKind::last_only, 1); }
    static MemoryKernel first_and_last() { return MemoryKernel(KernelKind::first_and_last, 0); }
    static MemoryKernel last_window(int m) {
        if (m < 1) throw std::invalid_argument("window length must be at least 1");
        return MemoryKernel(KernelKind::last_window, m);
    }

    // Accepts full | first | last | first-last | window:<m>.
    static MemoryKernel parse(std::string_view name) {
        if (name == "full") return full();
        if (name == "first") return first_only();
        if (name == "last") return last_only();
        if (name == "first-last") return first_and_last();
        constexpr std::string_view prefix = "window:";
        if (name.starts_with(prefix)) {
            auto digits = name.substr(prefix.size());
            int m = 0;
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), m);
            if (ec == std::errc{} && ptr == digits.data() + digits.size() && m >= 1)
                return last_window(m);
        }
        throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
    }

    KernelKind kind() const noexcept { return kind_; }
    int window() const noexcept { return window_; }

    std::string name() const {
        switch (kind_) {
        case KernelKind::full: return "full";
        case KernelKind::first_only: return "first";
        case KernelKind::last_only: return "last";
        case KernelKind::first_and_last: return "first-last";
        case KernelKind::last_window: return "window:" + std::to_string(window_);
        }
        return {};
    }

    // Indices (1-based) remembered after n >= 1 steps.
    std::vector<std::int64_t> memory_indices(std::int64_t n) const {
        std::vector<std::int64_t> out;
        switch (kind_) {
        case KernelKind::full:
            for (std::int64_t i = 1; i <= n; ++i) out.push_back(i);
            break;
        case KernelKind::first_only: out.push_back(1); break;
        case KernelKind::last_only: out.push_back(n); break;
        case KernelKind::first_and_last:
            out.push_back(1);
            if (n > 1) out.push_back(n);
            break;
        case KernelKind::last_window:
            for (std::int64_t i = std::max<std::int64_t>(1, n - window_ + 1); i <= n; ++i)
                out.push_back(i);
            break;
        }
        return out;
    }

    friend bool operator==(const MemoryKernel&, const MemoryKernel&) = default;

  private:
    MemoryKernel(KernelKind kind, int window) : kind_(kind), window_(window) {}

    KernelKind kind_;
    int window_;
};

//---------------------------------------------------------------------------//
// Kernel-specific sufficient statistics.

struct FullMemory {
    std::int64_t nonzeros = 0;
    std::int64_t signed_sum = 0;
};

struct FirstMemory {
    Step first = Step::stay;
};

struct LastMemory {
    Step last = Step::stay;
};

struct FirstLastMemory {
    Step first = Step::stay;
    Step last = Step::stay;
};

// Ring buffer over the last min(n, m) steps.
class WindowMemory {
  public:
    explicit WindowMemory(int m) : ring_(static_cast<std::size_t>(m), Step::stay) {}

    void push(Step s) noexcept {
        const std::size_t m = ring_.size();
        if (count_ == m) {
            const Step old = ring_[head_];
            nonzero_ -= is_nonzero(old);
            sum_ -= value(old);
        } else {
            ++count_;
        }
        ring_[head_] = s;
        head_ = (head_ + 1) % m;
        nonzero_ += is_nonzero(s);
        sum_ += value(s);
    }

    int capacity() const noexcept { return static_cast<int>(ring_.size()); }
    std::int64_t size() const noexcept { return static_cast<std::int64_t>(count_); }
    std::int64_t nonzero() const noexcept { return nonzero_; }
    std::int64_t signed_sum() const noexcept { return sum_; }

    // Oldest first.
    std::vector<Step> steps() const {
        std::vector<Step> out;
        out.reserve(count_);
        const std::size_t m = ring_.size();
        const std::size_t start = (head_ + m - count_) % m;
        for (std::size_t i = 0; i < count_; ++i) out.push_back(ring_[(start + i) % m]);
        return out;
    }

    friend bool operator==(const WindowMemory& a, const WindowMemory& b) {
        return a.capacity() == b.capacity() && a.steps() == b.steps();
    }

  private:
    std::vector<Step> ring_;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
    std::int64_t nonzero_ = 0;
    std::int64_t sum_ = 0;
};

using MemoryStat = std::variant<FullMemory, FirstMemory, LastMemory, FirstLastMemory, WindowMemory>;

// (M, c, sigma): remembered count, nonzero remembered count, signed sum.
struct MemorySummary {
    std::int64_t size = 0;
    std::int64_t nonzero = 0;
    std::int64_t signed_sum = 0;
};

struct WalkState {
    std::int64_t n = 0;
    std::int64_t position = 0;
    std::int64_t zeros = 0;
    std::int64_t nonzeros = 0;
    MemoryStat memory;
};

inline MemoryStat empty_memory(const MemoryKernel& kernel) {
    switch (kernel.kind()) {
    case KernelKind::full: return FullMemory{};
    case KernelKind::first_only: return FirstMemory{};
    case KernelKind::last_only: return LastMemory{};
    case KernelKind::first_and_last: return FirstLastMemory{};
    case KernelKind::last_window: return WindowMemory(kernel.window());
    }
    throw ModelIntegrityError("unknown kernel");
}

inline WalkState initial_state(const MemoryKernel& kernel) {
    return WalkState{0, 0, 0, 0, empty_memory(kernel)};
}

inline bool memory_matches(const MemoryStat& memory, const MemoryKernel& kernel) {
    switch (kernel.kind()) {
    case KernelKind::full: return std::holds_alternative<FullMemory>(memory);
    case KernelKind::first_only: return std::holds_alternative<FirstMemory>(memory);
    case KernelKind::last_only: return std::holds_alternative<LastMemory>(memory);
    case KernelKind::first_and_last: return std::holds_alternative<FirstLastMemory>(memory);
    case KernelKind::last_window: {
        auto* w = std::get_if<WindowMemory>(&memory);
        return w != nullptr && w->capacity() == kernel.window();
    }
    }
    return false;
}

namespace detail {

inline MemorySummary summarize(const FullMemory& m, std::int64_t n) noexcept {
    return {n, m.nonzeros, m.signed_sum};
}
inline MemorySummary summarize(const FirstMemory& m, std::int64_t) noexcept {
    return {1, is_nonzero(m.first), value(m.first)};
}
inline MemorySummary summarize(const LastMemory& m, std::int64_t) noexcept {
    return {1, is_nonzero(m.last), value(m.last)};
}
inline MemorySummary summarize(const FirstLastMemory& m, std::int64_t n) noexcept {
    // After one step the set {1, n} has a single element.
    if (n == 1) return {1, is_nonzero(m.first), value(m.first)};
    return {2, is_nonzero(m.first) + is_nonzero(m.last), value(m.first) + value(m.last)};
}
inline MemorySummary summarize(const WindowMemory& m, std::int64_t) noexcept {
    return {m.size(), m.nonzero(), m.signed_sum()};
}

inline void remember(FullMemory& m, Step s, std::int64_t) noexcept {
    m.nonzeros += is_nonzero(s);
    m.signed_sum += value(s);
}
inline void remember(FirstMemory& m, Step s, std::int64_t n_before) noexcept {
    if (n_before == 0) m.first = s;
}
inline void remember(LastMemory& m, Step s, std::int64_t) noexcept { m.last = s; }
inline void remember(FirstLastMemory& m, Step s, std::int64_t n_before) noexcept {
    if (n_before == 0) m.first = s;
    m.last = s;
}
inline void remember(WindowMemory& m, Step s, std::int64_t) noexcept { m.push(s); }

template <class Memory>
inline void record(WalkState& state, Memory& memory, Step s) noexcept {
    remember(memory, s, state.n);
    ++state.n;
    state.position += value(s);
    if (is_nonzero(s))
        ++state.nonzeros;
    else
        ++state.zeros;
}

}  // namespace detail

inline MemorySummary summarize(const WalkState& state) {
    return std::visit([&](const auto& m) { return detail::summarize(m, state.n); }, state.memory);
}

//---------------------------------------------------------------------------//
// Law of the next step.
struct StepLaw {
    double down = 0.0;
    double stay = 0.0;
    double up = 0.0;

    double operator[](Step s) const noexcept {
        return s == Step::down ? down : (s == Step::up ? up : stay);
    }
};

/*!
 * Next-step law given the remembered multiset summary.
 *
 * With K uniform over the M remembered indices, c of them nonzero with
 * signed sum sigma, the copied step is +1 for (c + sigma) / 2 indices and -1
 * for (c - sigma) / 2. A remembered zero yields a zero step regardless of the
 * coin.
 */
inline StepLaw step_law(const MemorySummary& mem, const ProbTriple& params) {
    const auto [size, c, sigma] = mem;
    if (size < 1 || c < 0 || c > size || std::abs(sigma) > c || (c - sigma) % 2 != 0)
        throw ModelIntegrityError("inconsistent memory statistic");
    const double m = static_cast<double>(size);
    const double plus = static_cast<double>((c + sigma) / 2);
    const double minus = static_cast<double>((c - sigma) / 2);
    StepLaw law;
    law.up = (params.p() * plus + params.q() * minus) / m;
    law.down = (params.q() * plus + params.p() * minus) / m;
    law.stay = static_cast<double>(size - c) / m + static_cast<double>(c) / m * params.r();
    return law;
}

inline StepLaw first_step_law(const ProbTriple& params) noexcept {
    return {params.q(), params.r(), params.p()};
}

inline StepLaw step_distribution(const WalkState& state, const MemoryKernel& kernel,
                                 const ProbTriple& params) {
    if (state.n < 1) throw ModelIntegrityError("step_distribution needs at least one step of history");
    if (!memory_matches(state.memory, kernel))
        throw ModelIntegrityError("memory statistic does not belong to kernel " + kernel.name());
    return step_law(summarize(state), params);
}

inline Step first_step(const ProbTriple& params, Xoshiro256& rng) noexcept {
    const double u = rng.uniform();
    if (u < params.p()) return Step::up;
    if (u < params.p() + params.q()) return Step::down;
    return Step::stay;
}

inline WalkState advance(WalkState state, Step step, const MemoryKernel& kernel) {
    if (!memory_matches(state.memory, kernel))
        throw ModelIntegrityError("memory statistic does not belong to kernel " + kernel.name());
    std::visit([&](auto& m) { detail::record(state, m, step); }, state.memory);
    return state;
}

//---------------------------------------------------------------------------//
// Simulation.

// 1, 2, 4, ... up to n, with n appended when it is not a power of two.
// Dense grids list every step.
inline std::vector<std::int64_t> checkpoint_grid(std::int64_t n, bool dense = false) {
    std::vector<std::int64_t> grid;
    if (n < 1) return grid;
    if (dense) {
        for (std::int64_t k = 1; k <= n; ++k) grid.push_back(k);
        return grid;
    }
    for (std::int64_t k = 1; k <= n; k *= 2) grid.push_back(k);
    if (grid.back() != n) grid.push_back(n);
    return grid;
}

namespace detail {

// Draws one step from the memory summary with a single uniform.
inline Step draw(const MemorySummary& mem, const ProbTriple& params, Xoshiro256& rng) noexcept {
    const double v = rng.uniform() * static_cast<double>(mem.size);
    const double plus = static_cast<double>((mem.nonzero + mem.signed_sum) / 2);
    const double minus = static_cast<double>((mem.nonzero - mem.signed_sum) / 2);
    const double up = params.p() * plus + params.q() * minus;
    if (v < up) return Step::up;
    if (v < up + params.q() * plus + params.p() * minus) return Step::down;
    return Step::stay;
}

}  // namespace detail

/*!
 * Runs one path to `horizon`, invoking `on_checkpoint(state)` whenever
 * state.n reaches the next entry of the sorted `checkpoints`.
 *
 * The kernel is resolved once; the inner loop is monomorphic. Returns the
 * first step.
 */
template <class OnCheckpoint>
Step run_walk(const MemoryKernel& kernel, const ProbTriple& params, std::int64_t horizon,
              Xoshiro256& rng, std::span<const std::int64_t> checkpoints,
              OnCheckpoint&& on_checkpoint) {
    WalkState state = initial_state(kernel);
    Step first = Step::stay;
    std::visit(
        [&](auto& memory) {
            std::size_t next = 0;
            auto emit = [&] {
                while (next < checkpoints.size() && checkpoints[next] == state.n) {
                    on_checkpoint(std::as_const(state));
                    ++next;
                }
            };
            if (horizon < 1) return;
            first = first_step(params, rng);
            detail::record(state, memory, first);
            emit();
            while (state.n < horizon) {
                const Step s = detail::draw(detail::summarize(memory, state.n), params, rng);
                detail::record(state, memory, s);
                emit();
            }
        },
        state.memory);
    return first;
}

struct Snapshot {
    std::int64_t n = 0;
    std::int64_t position = 0;
    std::int64_t zeros = 0;
    std::int64_t nonzeros = 0;

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct Trajectory {
    Step first = Step::stay;
    std::vector<Snapshot> snapshots;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Deterministic in (kernel, params, horizon, seed, replicate). Replicate k of
// an ensemble with master seed `seed` reproduces simulate_path(..., seed, k).
inline Trajectory simulate_path(const MemoryKernel& kernel, const ProbTriple& params,
                                std::int64_t horizon, std::uint64_t seed,
                                std::span<const std::int64_t> checkpoints,
                                std::uint64_t replicate = 0) {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
        (!checkpoints.empty() && (checkpoints.front() < 1 || checkpoints.back() > horizon)))
        throw std::invalid_argument("checkpoints must be sorted and lie in [1, horizon]");
    auto rng = Xoshiro256::stream(seed, replicate);
    Trajectory out;
    out.first = run_walk(kernel, params, horizon, rng, checkpoints, [&](const WalkState& s) {
        out.snapshots.push_back({s.n, s.position, s.zeros, s.nonzeros});
    });
    return out;
}

inline Trajectory simulate_path(const MemoryKernel& kernel, const ProbTriple& params,
                                std::int64_t horizon, std::uint64_t seed) {
    const auto grid = checkpoint_grid(horizon);
    return simulate_path(kernel, params, horizon, seed, grid);
}

}  // namespace erw
