#pragma once

#include "fedor/core.hpp"
#include "fedor/error.hpp"
#include "fedor/gof.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace fedor {

using DecisionVector = std::vector<double>;

inline constexpr std::uint64_t fnv1a_offset_basis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t fnv1a_prime = 0x100000001b3ULL;

inline std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t hash = fnv1a_offset_basis) {
    for (std::uint8_t b : bytes) {
        hash ^= b;
        hash *= fnv1a_prime;
    }
    return hash;
}

namespace detail {

inline void append_be64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

inline bool ranks_before(std::span<const double> values, std::size_t a, std::size_t b) {
    return values[a] > values[b] || (values[a] == values[b] && a < b);
}

} // namespace detail

/// Byte string hashed by deterministic_uniform: each bid as big-endian
/// binary64 in player order, then round and excluded player as big-endian u64.
inline std::vector<std::uint8_t> replacement_preimage(std::uint64_t round, std::size_t excluded_player,
                                                      std::span<const double> others_bids) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(8 * (others_bids.size() + 2));
    for (double b : others_bids) detail::append_be64(bytes, std::bit_cast<std::uint64_t>(b));
    detail::append_be64(bytes, round);
    detail::append_be64(bytes, static_cast<std::uint64_t>(excluded_player));
    return bytes;
}

/// Replacement value every replica derives for a player whose report failed
/// the GoF gate. Bit-identical on every platform.
inline double deterministic_uniform(std::uint64_t round, std::size_t excluded_player,
                                    std::span<const double> others_bids) {
    const std::uint64_t h = fnv1a64(replacement_preimage(round, excluded_player, others_bids));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Indices of the k largest values, descending, ties to the lower index.
inline std::vector<PlayerId> rank_top_k(std::span<const double> values, std::size_t k) {
    if (k > values.size()) {
        throw ConfigError("rank_top_k: k exceeds the number of players");
    }
    std::vector<PlayerId> order(values.size());
    std::iota(order.begin(), order.end(), PlayerId{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](PlayerId a, PlayerId b) { return detail::ranks_before(values, a, b); });
    order.resize(k);
    return order;
}

/// The values FEDoR ranks: passing reports unchanged, failing reports replaced.
inline DecisionVector fedor_decision_values(const BidVector& bids, const std::vector<bool>& verdicts) {
    const std::size_t n = bids.size();
    if (verdicts.size() != n) {
        throw ArgumentError("fedor_decide: one GoF verdict per player is required");
    }
    DecisionVector v(n);
    std::vector<double> others;
    others.reserve(n);
    for (PlayerId i = 0; i < n; ++i) {
        if (verdicts[i]) {
            v[i] = bids.bids[i];
            continue;
        }
        others.clear();
        for (PlayerId h = 0; h < n; ++h) {
            if (h != i) others.push_back(bids.bids[h]);
        }
        v[i] = deterministic_uniform(bids.round, i, others);
    }
    return v;
}

/// FEDoR decision from precomputed GoF verdicts. A pure function of
/// (bids, verdicts, round); every player is charged the flat fee.
inline AllocationOutcome fedor_decide(const BidVector& bids, const std::vector<bool>& verdicts,
                                      const SlotWeights& weights, double flat_fee = 0.0) {
    const std::size_t n = bids.size();
    if (n <= weights.size()) {
        throw ConfigError("fedor_decide: need more players than slots (n=" + std::to_string(n) +
                          ", k=" + std::to_string(weights.size()) + ")");
    }
    bids.validate(n);
    AllocationOutcome out;
    out.decision_values = fedor_decision_values(bids, verdicts);
    out.assignment = rank_top_k(out.decision_values, weights.size());
    out.payments.assign(n, flat_fee);
    return out;
}

inline std::vector<bool> gof_verdicts(const BidVector& bids, std::span<const HistoryBuffer> histories,
                                      const GoFConfig& gof) {
    if (histories.size() != bids.size()) {
        throw ArgumentError("fedor_decide: one history per player is required");
    }
    std::vector<bool> verdicts(bids.size());
    for (PlayerId i = 0; i < bids.size(); ++i) {
        verdicts[i] = gof_check(histories[i], bids.bids[i], gof);
    }
    return verdicts;
}

/// FEDoR decision running the KS gate against each player's history.
inline AllocationOutcome fedor_decide(const BidVector& bids, std::span<const HistoryBuffer> histories,
                                      const GoFConfig& gof, const SlotWeights& weights, double flat_fee = 0.0) {
    return fedor_decide(bids, gof_verdicts(bids, histories, gof), weights, flat_fee);
}

namespace detail {

struct Ranked {
    std::vector<PlayerId> order; // top k+1 players by bid
    std::vector<double> bid;     // their bids, descending
};

inline Ranked rank_bids(const BidVector& bids, std::size_t k) {
    if (bids.size() <= k) {
        throw ConfigError("position auction: need more bidders than slots");
    }
    bids.validate(bids.size());
    Ranked r;
    r.order = rank_top_k(bids.bids, k + 1);
    for (PlayerId i : r.order) r.bid.push_back(bids.bids[i]);
    return r;
}

} // namespace detail

/// VCG position auction: slot j pays the externality it imposes,
/// sum_{m>=j} (w_m - w_{m+1}) * b_(m+1) with w_{k+1} = 0.
inline AllocationOutcome vcg_decide(const BidVector& bids, const SlotWeights& weights) {
    const std::size_t k = weights.size();
    const auto ranked = detail::rank_bids(bids, k);
    AllocationOutcome out;
    out.assignment.assign(ranked.order.begin(), ranked.order.begin() + static_cast<std::ptrdiff_t>(k));
    out.payments.assign(bids.size(), 0.0);
    double tail = 0.0;
    for (std::size_t j = k; j-- > 0;) {
        const double next_w = j + 1 < k ? weights[j + 1] : 0.0;
        tail += (weights[j] - next_w) * ranked.bid[j + 1];
        out.payments[out.assignment[j]] = tail;
    }
    return out;
}

/// GSP position auction: slot j pays w_j times the next-highest bid.
inline AllocationOutcome gsp_decide(const BidVector& bids, const SlotWeights& weights) {
    const std::size_t k = weights.size();
    const auto ranked = detail::rank_bids(bids, k);
    AllocationOutcome out;
    out.assignment.assign(ranked.order.begin(), ranked.order.begin() + static_cast<std::ptrdiff_t>(k));
    out.payments.assign(bids.size(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        out.payments[out.assignment[j]] = weights[j] * ranked.bid[j + 1];
    }
    return out;
}

} // namespace fedor
