#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace erw {

using Rational = boost::multiprecision::cpp_rational;

template <class T>
double to_double(const T& x) {
    if constexpr (std::is_floating_point_v<T>)
        return static_cast<double>(x);
    else
        return x.template convert_to<double>();
}

// Finite probability mass function on the contiguous support
// {first, first + 1, ..., first + probs.size() - 1}.
template <class T = double>
struct Pmf {
    std::int64_t first = 0;
    std::vector<T> probs;

    std::size_t size() const noexcept { return probs.size(); }

    std::vector<std::int64_t> support() const {
        std::vector<std::int64_t> out(probs.size());
        for (std::size_t i = 0; i < probs.size(); ++i) out[i] = first + static_cast<std::int64_t>(i);
        return out;
    }

    // P(X = k); zero outside the support.
    T at(std::int64_t k) const {
        if (k < first || k >= first + static_cast<std::int64_t>(probs.size())) return T(0);
        return probs[static_cast<std::size_t>(k - first)];
    }

    T total() const {
        T s(0);
        for (const auto& p : probs) s += p;
        return s;
    }

    T moment(int order) const {
        T s(0);
        for (std::size_t i = 0; i < probs.size(); ++i) {
            T v(first + static_cast<std::int64_t>(i));
            T term = probs[i];
            for (int k = 0; k < order; ++k) term *= v;
            s += term;
        }
        return s;
    }

    T mean() const { return moment(1); }

    T variance() const {
        const T m = mean();
        return moment(2) - m * m;
    }

    Pmf<double> as_double() const {
        Pmf<double> out{first, {}};
        out.probs.reserve(probs.size());
        for (const auto& p : probs) out.probs.push_back(to_double(p));
        return out;
    }
};

// 1/2 sum |a - b| over the union of supports.
template <class T>
double total_variation(const Pmf<T>& a, const Pmf<T>& b) {
    const std::int64_t lo = std::min(a.first, b.first);
    const std::int64_t hi = std::max(a.first + static_cast<std::int64_t>(a.size()),
                                     b.first + static_cast<std::int64_t>(b.size()));
    double s = 0.0;
    for (std::int64_t k = lo; k < hi; ++k) s += std::abs(to_double(a.at(k)) - to_double(b.at(k)));
    return 0.5 * s;
}

}  // namespace erw
