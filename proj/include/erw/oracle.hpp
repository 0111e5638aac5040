#pragma once

// Exact laws of the nonzero-step indicators at small n, by dynamic
// programming over sufficient statistics. Templated on the scalar so the same
// recursion runs in double or in exact rational arithmetic.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <tuple>
#include <vector>

#include "erw/error.hpp"
#include "erw/model.hpp"
#include "erw/pmf.hpp"

namespace erw::oracle {

inline constexpr std::int64_t max_steps = 24;
inline constexpr std::int64_t max_window_steps = 20;
inline constexpr int max_window = 8;
inline constexpr std::int64_t max_signed_steps = 10;

inline void check_budget(const MemoryKernel& kernel, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("oracle: n must be at least 1");
    if (kernel.kind() == KernelKind::last_window) {
        if (kernel.window() > max_window || n > max_window_steps)
            throw BudgetError("oracle: windowed kernel limited to m <= 8 and n <= 20");
    } else if (n > max_steps) {
        throw BudgetError("oracle: n limited to 24");
    }
}

/*!
 * Distribution of (I*_1, recent indicators, N*_n) for a kernel.
 *
 * Signs are marginalized: given the memory holds c nonzero steps out of M,
 * the next step is nonzero with probability (1-r) c / M whatever p and q are.
 * `recent` keeps the last max(m, 1) indicators, most recent in bit 0.
 */
template <class T>
class IndicatorChain {
  public:
    struct Key {
        std::uint8_t first = 0;
        std::uint32_t recent = 0;
        std::int64_t count = 0;

        friend bool operator<(const Key& a, const Key& b) {
            return std::tie(a.first, a.recent, a.count) < std::tie(b.first, b.recent, b.count);
        }
    };

    IndicatorChain(const MemoryKernel& kernel, T r) : kernel_(kernel), r_(std::move(r)) {
        if (!(r_ > T(0) && r_ < T(1))) throw std::domain_error("oracle: r must lie strictly between 0 and 1");
        bits_ = kernel.kind() == KernelKind::last_window ? kernel.window() : 1;
        const T one(1);
        states_[Key{0, 0, 0}] = r_;
        states_[Key{1, 1, 1}] = one - r_;
        n_ = 1;
    }

    std::int64_t n() const noexcept { return n_; }
    const std::map<Key, T>& states() const noexcept { return states_; }

    // P(I*_{n+1} = 1 | state).
    T next_nonzero(const Key& k) const {
        std::int64_t size = 1;
        std::int64_t nonzero = 0;
        switch (kernel_.kind()) {
        case KernelKind::full:
            size = n_;
            nonzero = k.count;
            break;
        case KernelKind::first_only: nonzero = k.first; break;
        case KernelKind::last_only: nonzero = k.recent & 1u; break;
        case KernelKind::first_and_last:
            if (n_ == 1) {
                nonzero = k.first;
            } else {
                size = 2;
                nonzero = k.first + (k.recent & 1u);
            }
            break;
        case KernelKind::last_window: {
            size = std::min<std::int64_t>(n_, bits_);
            const std::uint32_t mask = (1u << size) - 1u;
            nonzero = std::popcount(k.recent & mask);
            break;
        }
        }
        if (nonzero == 0) return T(0);
        return (T(1) - r_) * T(nonzero) / T(size);
    }

    void step() {
        std::map<Key, T> next;
        const std::uint32_t mask = bits_ >= 32 ? ~0u : ((1u << bits_) - 1u);
        for (const auto& [key, prob] : states_) {
            const T p1 = next_nonzero(key);
            const T p0 = T(1) - p1;
            if (p0 != T(0)) {
                Key k0{key.first, (key.recent << 1) & mask, key.count};
                next[k0] += prob * p0;
            }
            if (p1 != T(0)) {
                Key k1{key.first, ((key.recent << 1) | 1u) & mask, key.count + 1};
                next[k1] += prob * p1;
            }
        }
        states_ = std::move(next);
        ++n_;
    }

    void run_to(std::int64_t n) {
        while (n_ < n) step();
    }

  private:
    MemoryKernel kernel_;
    T r_;
    int bits_ = 1;
    std::int64_t n_ = 0;
    std::map<Key, T> states_;
};

template <class T>
struct JointLaw {
    Pmf<T> count;                  // N*_n
    Pmf<T> count_first_zero;       // N*_n | I*_1 = 0
    Pmf<T> count_first_nonzero;    // N*_n | I*_1 = 1
    T first_nonzero = T(0);        // P(I*_1 = 1)
};

template <class T = double>
JointLaw<T> exact_joint(const MemoryKernel& kernel, std::int64_t n, const T& r) {
    check_budget(kernel, n);
    IndicatorChain<T> chain(kernel, r);
    chain.run_to(n);
    const auto size = static_cast<std::size_t>(n + 1);
    JointLaw<T> law;
    law.count = {0, std::vector<T>(size, T(0))};
    law.count_first_zero = law.count;
    law.count_first_nonzero = law.count;
    T p0(0), p1(0);
    for (const auto& [key, prob] : chain.states()) {
        const auto k = static_cast<std::size_t>(key.count);
        law.count.probs[k] += prob;
        if (key.first) {
            law.count_first_nonzero.probs[k] += prob;
            p1 += prob;
        } else {
            law.count_first_zero.probs[k] += prob;
            p0 += prob;
        }
    }
    for (auto& p : law.count_first_zero.probs) p /= p0;
    for (auto& p : law.count_first_nonzero.probs) p /= p1;
    law.first_nonzero = p1;
    return law;
}

template <class T = double>
Pmf<T> exact_distribution(const MemoryKernel& kernel, std::int64_t n, const T& r) {
    return exact_joint(kernel, n, r).count;
}

// E((N*_n)^order), optionally conditioned on I*_1 = 1.
template <class T = double>
T exact_moment(const MemoryKernel& kernel, std::int64_t n, const T& r, int order,
               bool condition_on_first_nonzero = false) {
    if (order < 0) throw std::invalid_argument("exact_moment: order must be nonnegative");
    if (condition_on_first_nonzero && !(r < T(1)))
        throw DegenerateError("exact_moment: P(I*_1 = 1) = 0");
    const auto law = exact_joint(kernel, n, r);
    return condition_on_first_nonzero ? law.count_first_nonzero.moment(order) : law.count.moment(order);
}

/*!
 * Largest |E(M*_{k+1} | N*_k) - M*_k| over reachable full-memory states,
 * k < n, with M*_k = alpha_k N*_k. `alpha_r` lets a test build the scalers
 * from a wrong r to check the deviation becomes visible.
 */
template <class T = double>
double martingale_check(std::int64_t n, const T& r, const T& alpha_r) {
    check_budget(MemoryKernel::full(), n);
    if (n > 20) throw BudgetError("martingale_check: n limited to 20");
    IndicatorChain<T> chain(MemoryKernel::full(), r);
    T alpha(1);
    double worst = 0.0;
    while (chain.n() < n) {
        const T k(chain.n());
        const T next_alpha = alpha * k / (k + T(1) - alpha_r);
        for (const auto& [key, prob] : chain.states()) {
            if (prob == T(0)) continue;
            const T count(key.count);
            const T expected_next = next_alpha * (count + chain.next_nonzero(key));
            const double dev = std::abs(to_double(T(expected_next - alpha * count)));
            worst = std::max(worst, dev);
        }
        alpha = next_alpha;
        chain.step();
    }
    return worst;
}

template <class T = double>
double martingale_check(std::int64_t n, const T& r) {
    return martingale_check(n, r, r);
}

// Corr(I*_n, I*_{n+1}) from the exact joint law.
template <class T = double>
double correlation(const MemoryKernel& kernel, std::int64_t n, const T& r) {
    if (n < 2) throw DegenerateError("correlation: degenerate for n < 2");
    check_budget(kernel, n);
    IndicatorChain<T> chain(kernel, r);
    chain.run_to(n);
    T e_now(0), e_next(0), e_both(0);
    for (const auto& [key, prob] : chain.states()) {
        const T p1 = chain.next_nonzero(key);
        const bool now = key.recent & 1u;
        if (now) {
            e_now += prob;
            e_both += prob * p1;
        }
        e_next += prob * p1;
    }
    const double a = to_double(e_now), b = to_double(e_next), ab = to_double(e_both);
    const double var = a * (1.0 - a) * b * (1.0 - b);
    if (!(var > 0.0)) throw DegenerateError("correlation: an indicator has zero variance");
    return (ab - a * b) / std::sqrt(var);
}

// P(every remembered step is zero after n steps); absorbing once it holds.
template <class T = double>
T absorption_probability(const MemoryKernel& kernel, std::int64_t n, const T& r) {
    check_budget(kernel, n);
    IndicatorChain<T> chain(kernel, r);
    chain.run_to(n);
    T total(0);
    for (const auto& [key, prob] : chain.states())
        if (chain.next_nonzero(key) == T(0)) total += prob;
    return total;
}

//---------------------------------------------------------------------------//
namespace reference {

// Next-step law by averaging over the literal remembered index set of a
// full history. Independent of the sufficient statistics in model.hpp.
inline StepLaw history_step_law(const MemoryKernel& kernel, const std::vector<Step>& history,
                                const ProbTriple& params) {
    const auto n = static_cast<std::int64_t>(history.size());
    if (n < 1) return first_step_law(params);
    const auto indices = kernel.memory_indices(n);
    StepLaw law;
    const double w = 1.0 / static_cast<double>(indices.size());
    for (auto i : indices) {
        const Step x = history[static_cast<std::size_t>(i - 1)];
        if (x == Step::stay) {
            law.stay += w;
        } else {
            const bool up = x == Step::up;
            law.up += w * (up ? params.p() : params.q());
            law.down += w * (up ? params.q() : params.p());
            law.stay += w * params.r();
        }
    }
    return law;
}

// Law of N*_n by enumerating every signed history (3^n leaves at most).
inline Pmf<double> exact_distribution_signed(const MemoryKernel& kernel, std::int64_t n,
                                             const ProbTriple& params) {
    if (n < 1) throw std::invalid_argument("oracle: n must be at least 1");
    if (n > max_signed_steps) throw BudgetError("signed reference limited to n <= 10");
    Pmf<double> pmf{0, std::vector<double>(static_cast<std::size_t>(n + 1), 0.0)};
    std::vector<Step> history;
    history.reserve(static_cast<std::size_t>(n));
    std::function<void(double, std::int64_t)> walk = [&](double prob, std::int64_t count) {
        if (static_cast<std::int64_t>(history.size()) == n) {
            pmf.probs[static_cast<std::size_t>(count)] += prob;
            return;
        }
        const StepLaw law = history_step_law(kernel, history, params);
        for (Step s : {Step::down, Step::stay, Step::up}) {
            const double p = law[s];
            if (p == 0.0) continue;
            history.push_back(s);
            walk(prob * p, count + is_nonzero(s));
            history.pop_back();
        }
    };
    walk(1.0, 0);
    return pmf;
}

}  // namespace reference

}  // namespace erw::oracle
