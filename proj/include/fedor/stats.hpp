#pragma once

#include "fedor/error.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fedor::stats {

// ---------------------------------------------------------------------------
// Cumulative distribution functions. Every handle clamps out-of-domain input
// to {0, 1}, so pit() never needs to special-case the tails.
// ---------------------------------------------------------------------------

template <typename F>
concept Cdf = requires(const F& f, double x) {
    { f(x) } -> std::convertible_to<double>;
};

struct UniformCdf {
    double lower = 0.0;
    double upper = 1.0;

    double operator()(double x) const {
        if (x <= lower) return 0.0;
        if (x >= upper) return 1.0;
        return (x - lower) / (upper - lower);
    }
};

struct NormalCdf {
    double mean = 0.0;
    double sigma = 1.0;

    double operator()(double x) const {
        return 0.5 * std::erfc(-(x - mean) / (sigma * std::sqrt(2.0)));
    }
};

/// Beta(alpha, beta) on [0,1], via the regularized incomplete beta function.
struct BetaCdf {
    double alpha = 1.0;
    double beta = 1.0;

    double operator()(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return 1.0;
        return boost::math::ibeta(alpha, beta, x);
    }
};

/// Empirical CDF of a non-empty sample in [0,1]. Ranks count ties inclusively.
class Ecdf {
public:
    explicit Ecdf(std::vector<double> sample) : sorted_(std::move(sample)) {
        if (sorted_.empty()) {
            throw ArgumentError("Ecdf: sample must be non-empty");
        }
        for (double v : sorted_) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ArgumentError("Ecdf: sample values must lie in [0,1]");
            }
        }
        std::sort(sorted_.begin(), sorted_.end());
    }

    double operator()(double x) const {
        auto rank = std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin();
        return static_cast<double>(rank) / static_cast<double>(sorted_.size());
    }

    std::span<const double> sorted_sample() const { return sorted_; }
    std::size_t size() const { return sorted_.size(); }

private:
    std::vector<double> sorted_;
};

/// Probability integral transform: maps x through the given CDF.
template <Cdf F>
double pit(double x, const F& cdf) {
    return std::clamp(static_cast<double>(cdf(x)), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// One-sample Kolmogorov-Smirnov against Uniform[0,1].
// ---------------------------------------------------------------------------

/// D for an already ascending sample.
inline double ks_statistic_sorted(std::span<const double> sorted) {
    if (sorted.empty()) {
        throw ArgumentError("ks_statistic: sample must be non-empty");
    }
    const double m = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double x = sorted[i];
        d = std::max(d, std::max(static_cast<double>(i + 1) / m - x, x - static_cast<double>(i) / m));
    }
    return d;
}

inline double ks_statistic(std::span<const double> sample) {
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    return ks_statistic_sorted(sorted);
}

namespace detail {

// max_i max(i + 1 - m x_i, m x_i - i) over a run of the merged sample whose
// first element has merged rank `first`. Works in count units (no division).
inline double scaled_gap(std::span<const double> run, std::size_t first, double m) {
    // Four independent accumulators keep the loop throughput-bound.
    double best[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t n = run.size();
    std::size_t i = 0;
    auto step = [&](std::size_t lane, std::size_t idx) {
        const double rank = static_cast<double>(first + idx);
        const double mx = m * run[idx];
        const double a = (rank + 1.0) - mx;
        const double b = mx - rank;
        const double g = a > b ? a : b;
        best[lane] = g > best[lane] ? g : best[lane];
    };
    for (; i + 4 <= n; i += 4) {
        step(0, i);
        step(1, i + 1);
        step(2, i + 2);
        step(3, i + 3);
    }
    for (; i < n; ++i) step(0, i);
    return std::max({best[0], best[1], best[2], best[3]});
}

} // namespace detail

/// D of (sorted ∪ {extra}) without materializing the merged sample. Agrees with
/// ks_statistic on the merged sample to within a few ulps.
inline double ks_statistic_with(std::span<const double> sorted, double extra) {
    const std::size_t pos =
        static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), extra) - sorted.begin());
    const double m = static_cast<double>(sorted.size() + 1);
    const double left = detail::scaled_gap(sorted.first(pos), 0, m);
    const double mid = detail::scaled_gap(std::span<const double>(&extra, 1), pos, m);
    const double right = detail::scaled_gap(sorted.subspan(pos), pos + 1, m);
    return std::max({left, mid, right}) / m;
}

/// Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
    if (lambda < 1e-8) return 1.0;
    if (lambda < 1.0) {
        // The alternating series converges slowly here; use the equivalent
        // theta-function form 1 - sqrt(2 pi)/lambda sum_{j odd} exp(-j^2 pi^2 / (8 lambda^2)).
        constexpr double pi = 3.14159265358979323846;
        const double b = -pi * pi / (8.0 * lambda * lambda);
        double cdf = 0.0;
        for (int j = 1; j < 1000; j += 2) {
            const double term = std::exp(b * static_cast<double>(j) * static_cast<double>(j));
            cdf += term;
            if (term < 1e-17) break;
        }
        return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * cdf, 0.0, 1.0);
    }
    const double a = -2.0 * lambda * lambda;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100000; ++j) {
        const double term = sign * 2.0 * std::exp(a * static_cast<double>(j) * static_cast<double>(j));
        sum += term;
        if (std::abs(term) < 1e-12) break;
        sign = -sign;
    }
    return std::clamp(sum, 0.0, 1.0);
}

/// Asymptotic p-value with the Stephens small-sample correction.
inline double ks_pvalue(double d, std::size_t m) {
    if (m == 0) {
        throw ArgumentError("ks_pvalue: sample size must be positive");
    }
    const double root = std::sqrt(static_cast<double>(m));
    return kolmogorov_q((root + 0.12 + 0.11 / root) * d);
}

/// E[j-th largest of n iid Uniform[0,1]] = (n + 1 - j) / (n + 1).
inline double expected_order_statistic(int n, int j) {
    if (n < 1 || j < 1 || j > n) {
        throw ArgumentError("expected_order_statistic: need 1 <= j <= n, got n=" + std::to_string(n) +
                            " j=" + std::to_string(j));
    }
    return static_cast<double>(n + 1 - j) / static_cast<double>(n + 1);
}

} // namespace fedor::stats
