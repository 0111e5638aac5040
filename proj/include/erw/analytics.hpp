#pragma once

// Closed forms and exact moment recursions for the counting process N*_n
// (number of nonzero steps among the first n).

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "erw/model.hpp"
#include "erw/pmf.hpp"

namespace erw::analytics {

namespace detail {

inline void check_r(double r) {
    if (!(r > 0.0 && r < 1.0)) throw std::domain_error("r must lie strictly between 0 and 1");
}

// log Gamma(z + x) - log Gamma(z) for z, z + x >= 20 from the Stirling
// series, arranged so nothing of size z log z is ever subtracted.
inline double log_gamma_ratio_large(double z, double x) {
    static constexpr std::array<double, 6> coef = {
        1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0};
    const double w = z + x;
    double value = (z - 0.5) * std::log1p(x / z) + x * std::log(w) - x;
    const double iw2 = 1.0 / (w * w);
    const double iz2 = 1.0 / (z * z);
    double pw = 1.0 / w;
    double pz = 1.0 / z;
    for (double c : coef) {
        value += c * (pw - pz);
        pw *= iw2;
        pz *= iz2;
    }
    return value;
}

}  // namespace detail

/*!
 * Gamma(n + 1 + x) / Gamma(n + 1).
 *
 * Small arguments are shifted upward with Gamma(y + 1) = y Gamma(y) until
 * both exceed 20, then the Stirling difference series takes over. Relative
 * error is a few ulps times |log of the ratio|.
 */
inline double gamma_ratio_exact(double n, double x) {
    const double z = n + 1.0;
    if (!(n >= 0.0)) throw std::domain_error("gamma_ratio_exact: n must be nonnegative");
    if (!(z + x > 0.0)) throw std::domain_error("gamma_ratio_exact: Gamma argument n+1+x must be positive");
    constexpr double threshold = 20.0;
    double factor = 1.0;
    double zz = z;
    while (zz < threshold || zz + x < threshold) {
        factor *= zz / (zz + x);
        zz += 1.0;
    }
    return factor * std::exp(detail::log_gamma_ratio_large(zz, x));
}

// Two-term expansion n^x (1 + x(1+x)/(2n)).
inline double gamma_ratio_asymptotic(double n, double x) {
    if (!(n >= 1.0)) throw std::domain_error("gamma_ratio_asymptotic: n must be at least 1");
    return std::pow(n, x) * (1.0 + x * (1.0 + x) / (2.0 * n));
}

//---------------------------------------------------------------------------//
// First-order linear difference equations x_{n+1} = a x_n + b_n.

struct DifferenceEq {
    double a = 0.0;
    std::function<double(std::int64_t)> forcing;  // n -> b_n, n >= 1
    double x1 = 0.0;

    static DifferenceEq power(double a, double b, double gamma, double x1) {
        return {a, [b, gamma](std::int64_t n) { return b * std::pow(static_cast<double>(n), gamma); },
                x1};
    }
};

// x_n = a^{n-1} x_1 + sum_{v=0}^{n-2} a^v b_{n-1-v}.
inline double solve_difference_eq(const DifferenceEq& eq, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("solve_difference_eq: n must be at least 1");
    double sum = 0.0;
    double apow = 1.0;
    for (std::int64_t v = 0; v <= n - 2; ++v) {
        sum += apow * eq.forcing(n - 1 - v);
        apow *= eq.a;
    }
    return apow * eq.x1 + sum;
}

// b_{n-1}/(1-a) - gamma a b_{n-1} / (n (1-a)^2) with b_n = b n^gamma.
inline double difference_eq_asymptotic(double a, double b, double gamma, std::int64_t n) {
    if (!(std::abs(a) < 1.0)) throw std::domain_error("difference_eq_asymptotic: need |a| < 1");
    if (!(gamma > -1.0)) throw std::domain_error("difference_eq_asymptotic: need gamma > -1");
    if (n < 2) throw std::invalid_argument("difference_eq_asymptotic: n must be at least 2");
    const double bn = b * std::pow(static_cast<double>(n - 1), gamma);
    return bn / (1.0 - a) - gamma * a * bn / (static_cast<double>(n) * (1.0 - a) * (1.0 - a));
}

//---------------------------------------------------------------------------//
// Scalers turning E(U_{n+1} | F_n) = a_n U_n + b_n into the martingale
// alpha_n U_n + beta_n.
struct MartingaleScalers {
    std::vector<double> alpha_;  // alpha_[k - 1] = alpha_k
    std::vector<double> beta_;

    double alpha(std::int64_t k) const { return alpha_.at(static_cast<std::size_t>(k - 1)); }
    double beta(std::int64_t k) const { return beta_.at(static_cast<std::size_t>(k - 1)); }
    std::int64_t size() const noexcept { return static_cast<std::int64_t>(alpha_.size()); }
};

template <class ASeq, class BSeq>
MartingaleScalers martingale_scalers(ASeq&& a, BSeq&& b, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("martingale_scalers: n must be at least 1");
    MartingaleScalers out;
    out.alpha_.reserve(static_cast<std::size_t>(n));
    out.beta_.reserve(static_cast<std::size_t>(n));
    out.alpha_.push_back(1.0);
    out.beta_.push_back(0.0);
    for (std::int64_t k = 1; k < n; ++k) {
        const double ak = a(k);
        if (ak == 0.0) throw std::domain_error("martingale_scalers: a_k must be nonzero");
        const double next_alpha = out.alpha_.back() / ak;
        out.alpha_.push_back(next_alpha);
        out.beta_.push_back(out.beta_.back() - next_alpha * b(k));
    }
    return out;
}

//---------------------------------------------------------------------------//
// Full memory.

// E(N*_n) = Gamma(n+1-r) / (Gamma(1-r) Gamma(n)).
inline double full_mean(std::int64_t n, double r) {
    detail::check_r(r);
    if (n < 1) throw std::invalid_argument("full_mean: n must be at least 1");
    return gamma_ratio_exact(static_cast<double>(n - 1), 1.0 - r) / std::tgamma(1.0 - r);
}

// alpha*_k = prod_{j<k} j/(j+1-r) = Gamma(k) Gamma(2-r) / Gamma(k+1-r).
inline double full_alpha(std::int64_t k, double r) {
    detail::check_r(r);
    if (k < 1) throw std::invalid_argument("full_alpha: k must be at least 1");
    return std::tgamma(2.0 - r) / gamma_ratio_exact(static_cast<double>(k - 1), 1.0 - r);
}

struct MomentRow {
    std::int64_t n = 0;
    double mean = 0.0;    // E(N*_n)
    double second = 0.0;  // E((N*_n)^2)
    double mixed = 0.0;   // E(N*_n I*_n)
    double variance = 0.0;
};

// Iterates E((N*_{n+1})^2) = E((N*_n)^2)(1 + 2(1-r)/n) + (1-r)/n E(N*_n)
// from E((N*_1)^2) = 1 - r, taking E(N*_n) from full_mean.
class FullMomentRecursion {
  public:
    explicit FullMomentRecursion(double r) : r_(r), mean_(1.0 - r), second_(1.0 - r), mixed_(1.0 - r) {
        detail::check_r(r);
    }

    void advance() {
        const double s = 1.0 - r_;
        const double k = static_cast<double>(n_);
        mixed_ = s / k * (second_ + mean_);
        second_ = second_ * (1.0 + 2.0 * s / k) + s / k * mean_;
        ++n_;
        mean_ = full_mean(n_, r_);
    }

    std::int64_t n() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double second() const noexcept { return second_; }
    MomentRow row() const noexcept { return {n_, mean_, second_, mixed_, second_ - mean_ * mean_}; }

  private:
    double r_;
    std::int64_t n_ = 1;
    double mean_;
    double second_;
    double mixed_;
};

inline double full_second_moment(std::int64_t n, double r) {
    if (n < 1) throw std::invalid_argument("full_second_moment: n must be at least 1");
    FullMomentRecursion rec(r);
    while (rec.n() < n) rec.advance();
    return rec.second();
}

/*!
 * E<M*_n>: the expected bracket of the full-memory martingale
 * M*_n = alpha*_n N*_n. The first increment contributes Var(I*_1) = r(1-r);
 * later ones (alpha*_{k+1})^2 (-(1-r)^2/k^2 E((N*_k)^2) + (1-r)/k E(N*_k)).
 */
inline double bracket_expectation(std::int64_t n, double r) {
    detail::check_r(r);
    if (n < 1) throw std::invalid_argument("bracket_expectation: n must be at least 1");
    const double s = 1.0 - r;
    double total = r * s;
    double alpha = 1.0;
    FullMomentRecursion rec(r);
    while (rec.n() < n) {
        const double k = static_cast<double>(rec.n());
        alpha *= k / (k + s);
        total += alpha * alpha * (-s * s / (k * k) * rec.second() + s / k * rec.mean());
        rec.advance();
    }
    return total;
}

//---------------------------------------------------------------------------//
// First and last step remembered, conditioned on I*_1 = 1. With a = (1-r)/2,
//   E(I*_{n+1} | F_n) = a + a I*_n
// drives coupled recursions for E(I*_n), E(N*_n), E(N*_n I*_n), E((N*_n)^2).
struct MixedMoments {
    std::int64_t n = 1;
    double indicator = 1.0;        // E(I*_n)
    double count = 1.0;            // E(N*_n)
    double count_indicator = 1.0;  // E(N*_n I*_n)
    double count_sq = 1.0;         // E((N*_n)^2)

    double variance() const noexcept { return count_sq - count * count; }

    MixedMoments next(double r) const noexcept {
        const double a = (1.0 - r) / 2.0;
        MixedMoments m;
        m.n = n + 1;
        m.indicator = a + a * indicator;
        m.count = count + m.indicator;
        m.count_indicator = a * count_indicator + a * count + a + a * indicator;
        m.count_sq = count_sq + (1.0 - r) * count + (1.0 - r) * count_indicator + a + a * indicator;
        return m;
    }
};

inline MixedMoments mixed_kernel_moments(std::int64_t n, double r) {
    detail::check_r(r);
    if (n < 1) throw std::invalid_argument("mixed_kernel_moments: n must be at least 1");
    MixedMoments m;
    while (m.n < n) m = m.next(r);
    return m;
}

//---------------------------------------------------------------------------//
// Last step remembered: N*_n is a geometric count truncated at n.
inline Pmf<double> geometric_law(std::int64_t n, double r) {
    detail::check_r(r);
    if (n < 1) throw std::invalid_argument("geometric_law: n must be at least 1");
    Pmf<double> pmf{0, std::vector<double>(static_cast<std::size_t>(n + 1))};
    double tail = 1.0;  // (1-r)^k
    for (std::int64_t k = 0; k < n; ++k) {
        pmf.probs[static_cast<std::size_t>(k)] = tail * r;
        tail *= 1.0 - r;
    }
    pmf.probs[static_cast<std::size_t>(n)] = tail;
    return pmf;
}

//---------------------------------------------------------------------------//
struct LimitConstants {
    double r = 0.0;
    double c_r = 0.0;
    double c_r_tail = 0.0;  // exact remainder added after the partial sum
    double d_r = 0.0;
    double mean_limit = 0.0;       // lim E(N*_n / n^{1-r}) = 1/Gamma(1-r)
    double var_limit = 0.0;        // lim Var(N*_n / n^{1-r}) = d_r - Gamma(1-r)^-2
    double var_y_rescaled = 0.0;   // (1-r)^2 (Gamma(1-r)^2 d_r - 1)
    double var_y_remark = 0.0;     // (1-r)^2 (d_r / Gamma(1-r)^2 - 1)
    double sigma_star_sq = 0.0;    // 6r(1-r)/(1+r)^2, the stated first+last CLT variance
    double chain_variance_rate = 0.0;  // 2r(1-r)(3-r)/(1+r)^3, two-state chain value
    double first_only_fraction = 0.0;        // (1-r)^2
    double first_only_zero_fraction = 0.0;   // r(2-r)
    double first_only_branch_variance = 0.0; // r(1-r)
    double first_last_fraction = 0.0;        // (1-r)^2/(1+r)
    double first_last_zero_fraction = 0.0;   // r(3-r)/(1+r)
    double first_last_branch_fraction = 0.0; // (1-r)/(1+r)
    double first_last_mean_offset = 0.0;     // 4r/(1+r)^2
    double geometric_mean = 0.0;             // (1-r)/r
};

/*!
 * Full-memory constants plus the per-kernel strong-law targets.
 *
 * c_r = sum_{k>=1} Gamma(k+1-r)/Gamma(k+3-2r). Each term telescopes,
 * term_k = (T_k - T_{k+1})/(1-r) with T_k = Gamma(k+1-r)/Gamma(k+2-2r) -> 0,
 * so after K terms the remainder is exactly T_{K+1}/(1-r).
 */
inline LimitConstants limit_constants(double r) {
    detail::check_r(r);
    constexpr std::int64_t partial_terms = 64;
    const double s = 1.0 - r;
    auto term = [r](double k) { return gamma_ratio_exact(k, -r) / gamma_ratio_exact(k, 2.0 - 2.0 * r); };
    auto telescoped = [r](double k) { return gamma_ratio_exact(k, -r) / gamma_ratio_exact(k, 1.0 - 2.0 * r); };

    LimitConstants c;
    c.r = r;
    double partial = 0.0;
    for (std::int64_t k = partial_terms; k >= 1; --k) partial += term(static_cast<double>(k));
    c.c_r_tail = telescoped(static_cast<double>(partial_terms + 1)) / s;
    c.c_r = partial + c.c_r_tail;

    const double g = std::tgamma(s);
    c.d_r = s / g * (c.c_r + g / (2.0 * s * std::tgamma(2.0 * s)));
    c.mean_limit = 1.0 / g;
    c.var_limit = c.d_r - 1.0 / (g * g);
    c.var_y_rescaled = s * s * (g * g * c.d_r - 1.0);
    c.var_y_remark = s * s * (c.d_r / (g * g) - 1.0);
    c.sigma_star_sq = 6.0 * r * s / ((1.0 + r) * (1.0 + r));
    c.chain_variance_rate = 2.0 * r * s * (3.0 - r) / std::pow(1.0 + r, 3);
    c.first_only_fraction = s * s;
    c.first_only_zero_fraction = r * (2.0 - r);
    c.first_only_branch_variance = r * s;
    c.first_last_fraction = s * s / (1.0 + r);
    c.first_last_zero_fraction = r * (3.0 - r) / (1.0 + r);
    c.first_last_branch_fraction = s / (1.0 + r);
    c.first_last_mean_offset = 4.0 * r / ((1.0 + r) * (1.0 + r));
    c.geometric_mean = s / r;
    return c;
}

//---------------------------------------------------------------------------//
struct MomentTable {
    MemoryKernel kernel = MemoryKernel::full();
    double r = 0.0;
    bool conditioned_on_first_nonzero = false;
    std::vector<MomentRow> rows;  // rows[i].n == i + 1
};

// Rows n = 1..n_max from closed forms or exact recursions. The windowed
// kernel has neither; use the oracle for it.
inline MomentTable moment_table(const MemoryKernel& kernel, std::int64_t n_max, double r) {
    detail::check_r(r);
    if (n_max < 1) throw std::invalid_argument("moment_table: n must be at least 1");
    MomentTable t{kernel, r, false, {}};
    t.rows.reserve(static_cast<std::size_t>(n_max));
    const double s = 1.0 - r;
    switch (kernel.kind()) {
    case KernelKind::full: {
        FullMomentRecursion rec(r);
        t.rows.push_back(rec.row());
        while (rec.n() < n_max) {
            rec.advance();
            t.rows.push_back(rec.row());
        }
        break;
    }
    case KernelKind::first_only:
        // Given I*_1 = 1 the count is 1 + Binomial(n-1, 1-r); otherwise 0.
        for (std::int64_t n = 1; n <= n_max; ++n) {
            const double mu = static_cast<double>(n - 1) * s;
            const double v = static_cast<double>(n - 1) * r * s;
            MomentRow row{n, s * (1.0 + mu), s * ((1.0 + mu) * (1.0 + mu) + v), 0.0, 0.0};
            row.mixed = n == 1 ? s : s * s * (2.0 + static_cast<double>(n - 2) * s);
            row.variance = row.second - row.mean * row.mean;
            t.rows.push_back(row);
        }
        break;
    case KernelKind::last_only:
        for (std::int64_t n = 1; n <= n_max; ++n) {
            const auto pmf = geometric_law(n, r);
            MomentRow row{n, pmf.mean(), pmf.moment(2), static_cast<double>(n) * pmf.at(n), 0.0};
            row.variance = row.second - row.mean * row.mean;
            t.rows.push_back(row);
        }
        break;
    case KernelKind::first_and_last: {
        t.conditioned_on_first_nonzero = true;
        MixedMoments m;
        for (std::int64_t n = 1; n <= n_max; ++n) {
            t.rows.push_back({n, m.count, m.count_sq, m.count_indicator, m.variance()});
            m = m.next(r);
        }
        break;
    }
    case KernelKind::last_window:
        throw std::invalid_argument("moment_table: no closed form for the windowed kernel");
    }
    return t;
}

}  // namespace erw::analytics
