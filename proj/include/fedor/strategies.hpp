#pragma once

#include "fedor/core.hpp"
#include "fedor/error.hpp"
#include "fedor/rng.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

namespace fedor {

enum class StrategyKind {
    honest,
    normal,         // independent Normal(mu, sigma) truncated to [0,1] by resampling
    beta_uncorr,    // independent Beta(1, beta)
    beta_corr,      // theta^(1/beta), marginal Beta(beta, 1)
    random_uniform, // independent Uniform[0,1]
};

struct StrategySpec {
    StrategyKind kind = StrategyKind::honest;
    double mu = 0.5;
    double sigma = 0.15;
    double beta = 1.0;

    static StrategySpec honest() { return {}; }
    static StrategySpec normal(double mu, double sigma) { return checked({StrategyKind::normal, mu, sigma, 1.0}); }
    static StrategySpec beta_uncorrelated(double beta) { return checked({StrategyKind::beta_uncorr, 0.5, 0.15, beta}); }
    static StrategySpec beta_correlated(double beta) { return checked({StrategyKind::beta_corr, 0.5, 0.15, beta}); }
    static StrategySpec random_uniform() { return {StrategyKind::random_uniform, 0.5, 0.15, 1.0}; }

    void validate() const {
        switch (kind) {
        case StrategyKind::normal:
            if (!(mu > 0.0 && mu < 1.0) || !(sigma > 0.0)) {
                throw ConfigError("normal strategy needs mu in (0,1) and sigma > 0");
            }
            break;
        case StrategyKind::beta_uncorr:
        case StrategyKind::beta_corr:
            if (!(beta > 0.0 && beta <= 1.0)) {
                throw ConfigError("beta strategy needs beta in (0,1]");
            }
            break;
        default:
            break;
        }
    }

    bool is_honest() const { return kind == StrategyKind::honest; }

    /// Reports are the true type or a strictly increasing transform whose
    /// marginal stays Uniform[0,1]. The perfect GoF oracle passes exactly these.
    bool reports_faithful_uniform() const {
        return kind == StrategyKind::honest || (kind == StrategyKind::beta_corr && beta == 1.0);
    }

    friend bool operator==(const StrategySpec&, const StrategySpec&) = default;

private:
    static StrategySpec checked(StrategySpec s) {
        s.validate();
        return s;
    }
};

namespace detail {

inline std::string format_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Prefer the short form when it round-trips.
    char shorter[32];
    for (int precision = 1; precision < 17; ++precision) {
        std::snprintf(shorter, sizeof shorter, "%.*g", precision, v);
        if (std::strtod(shorter, nullptr) == v) return shorter;
    }
    return buf;
}

inline double parse_param(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("invalid " + std::string(what) + " parameter '" + std::string(text) + "'");
    }
    return v;
}

} // namespace detail

/// Canonical text form: honest | uniform | normal:MU:SIGMA | beta:B | beta-corr:B
inline std::string to_string(const StrategySpec& s) {
    switch (s.kind) {
    case StrategyKind::honest: return "honest";
    case StrategyKind::random_uniform: return "uniform";
    case StrategyKind::normal: return "normal:" + detail::format_param(s.mu) + ":" + detail::format_param(s.sigma);
    case StrategyKind::beta_uncorr: return "beta:" + detail::format_param(s.beta);
    case StrategyKind::beta_corr: return "beta-corr:" + detail::format_param(s.beta);
    }
    return "unknown";
}

inline StrategySpec parse_strategy(std::string_view text) {
    auto split = [](std::string_view s) {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        while (true) {
            const auto pos = s.find(':', start);
            parts.push_back(s.substr(start, pos - start));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return parts;
    };
    const auto parts = split(text);
    const auto name = parts.front();
    if (name == "honest" && parts.size() == 1) return StrategySpec::honest();
    if (name == "uniform" && parts.size() == 1) return StrategySpec::random_uniform();
    if (name == "normal" && parts.size() == 3) {
        return StrategySpec::normal(detail::parse_param(parts[1], "normal mu"),
                                    detail::parse_param(parts[2], "normal sigma"));
    }
    if (name == "beta" && parts.size() == 2) {
        return StrategySpec::beta_uncorrelated(detail::parse_param(parts[1], "beta"));
    }
    if (name == "beta-corr" && parts.size() == 2) {
        return StrategySpec::beta_correlated(detail::parse_param(parts[1], "beta"));
    }
    throw ConfigError("unknown strategy '" + std::string(text) +
                      "' (expected honest | uniform | normal:MU:SIGMA | beta:B | beta-corr:B)");
}

/// True types are iid Uniform[0,1] for every player regardless of strategy.
inline PlayerType draw_true_type(CounterRng& rng) { return PlayerType(rng.uniform()); }

inline double declare(const StrategySpec& strategy, PlayerType theta, CounterRng& rng) {
    switch (strategy.kind) {
    case StrategyKind::honest:
        return theta.value();
    case StrategyKind::normal:
        while (true) {
            const double x = strategy.mu + strategy.sigma * rng.normal();
            if (x >= 0.0 && x <= 1.0) return x;
        }
    case StrategyKind::beta_uncorr:
        // inverse CDF of Beta(1, b): F(x) = 1 - (1 - x)^b
        return 1.0 - std::pow(1.0 - rng.uniform(), 1.0 / strategy.beta);
    case StrategyKind::beta_corr:
        return std::pow(theta.value(), 1.0 / strategy.beta);
    case StrategyKind::random_uniform:
        return rng.uniform();
    }
    return theta.value();
}

} // namespace fedor
