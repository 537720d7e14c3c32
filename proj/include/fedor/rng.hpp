#pragma once

#include <cmath>
#include <cstdint>

namespace fedor {

// Counter-based generator: every draw is a pure function of (key, counter), so
// any (seed, experiment, player, purpose, index) stream can be regenerated in
// isolation and streams never overlap across threads.

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class Purpose : std::uint64_t {
    true_type = 1,
    declaration = 2,
    warmup_type = 3,
    warmup_declaration = 4,
    delivery = 5,
    test = 6,
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t experiment = 0;
    std::uint64_t player = 0;
    Purpose purpose = Purpose::test;
    std::uint64_t index = 0;

    constexpr std::uint64_t digest() const {
        std::uint64_t h = mix64(seed);
        h = mix64(h ^ experiment);
        h = mix64(h ^ player);
        h = mix64(h ^ static_cast<std::uint64_t>(purpose));
        return mix64(h ^ index);
    }
};

class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(StreamKey key) : key_(key.digest()) {}
    explicit constexpr CounterRng(std::uint64_t raw_key) : key_(mix64(raw_key)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    constexpr result_type operator()() { return mix64(key_ ^ mix64(counter_++)); }

    /// Uniform on [0,1) with 53 bits of resolution.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (one variate per call).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        constexpr double two_pi = 6.28318530717958647692;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    constexpr std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace fedor
