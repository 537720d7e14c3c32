#pragma once

#include "fedor/error.hpp"
#include "fedor/gof.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedor {

using PlayerId = std::size_t;
using SlotIndex = std::size_t;

/// Relative slot values w_1 >= w_2 >= ... >= w_k > 0.
class SlotWeights {
public:
    explicit SlotWeights(std::vector<double> weights) : w_(std::move(weights)) {
        if (w_.empty()) {
            throw ConfigError("SlotWeights: at least one slot is required");
        }
        for (std::size_t j = 0; j < w_.size(); ++j) {
            if (!(w_[j] > 0.0) || !std::isfinite(w_[j])) {
                throw ConfigError("SlotWeights: weights must be positive and finite");
            }
            if (j > 0 && w_[j] > w_[j - 1]) {
                throw ConfigError("SlotWeights: weights must be non-increasing");
            }
        }
    }

    /// (k, k-1, ..., 1)
    static SlotWeights descending(std::size_t k) {
        std::vector<double> w(k);
        for (std::size_t j = 0; j < k; ++j) w[j] = static_cast<double>(k - j);
        return SlotWeights(std::move(w));
    }

    std::size_t size() const { return w_.size(); }
    double operator[](SlotIndex j) const { return w_[j]; }
    std::span<const double> values() const { return w_; }

    double sum() const {
        double s = 0.0;
        for (double w : w_) s += w;
        return s;
    }

    friend bool operator==(const SlotWeights&, const SlotWeights&) = default;

private:
    std::vector<double> w_;
};

/// A player's true private valuation for one round.
class PlayerType {
public:
    explicit PlayerType(double theta) : theta_(theta) {
        if (!(theta >= 0.0 && theta <= 1.0)) {
            throw ArgumentError("PlayerType: theta must lie in [0,1]");
        }
    }
    double value() const { return theta_; }

private:
    double theta_;
};

struct BidVector {
    std::uint64_t round = 0;
    std::vector<double> bids;

    std::size_t size() const { return bids.size(); }

    void validate(std::size_t n) const {
        if (bids.size() != n) {
            throw ArgumentError("BidVector: expected " + std::to_string(n) + " bids, got " +
                                std::to_string(bids.size()));
        }
        for (double b : bids) {
            if (!(b >= 0.0 && b <= 1.0)) {
                throw ArgumentError("BidVector: bids must lie in [0,1]");
            }
        }
    }
};

struct AllocationOutcome {
    /// assignment[j] is the player receiving slot j.
    std::vector<PlayerId> assignment;
    std::vector<double> payments;
    /// Post-filter values (FEDoR only, empty otherwise).
    std::vector<double> decision_values;

    std::optional<SlotIndex> slot_of(PlayerId player) const {
        for (SlotIndex j = 0; j < assignment.size(); ++j) {
            if (assignment[j] == player) return j;
        }
        return std::nullopt;
    }

    friend bool operator==(const AllocationOutcome&, const AllocationOutcome&) = default;
};

enum class MechanismKind { fedor, vcg, gsp };

inline std::string_view to_string(MechanismKind kind) {
    switch (kind) {
    case MechanismKind::fedor: return "fedor";
    case MechanismKind::vcg: return "vcg";
    case MechanismKind::gsp: return "gsp";
    }
    return "unknown";
}

inline MechanismKind parse_mechanism(std::string_view text) {
    if (text == "fedor") return MechanismKind::fedor;
    if (text == "vcg") return MechanismKind::vcg;
    if (text == "gsp") return MechanismKind::gsp;
    throw ConfigError("unknown mechanism '" + std::string(text) + "' (expected fedor|vcg|gsp)");
}

struct MechanismConfig {
    std::size_t players = 9;
    SlotWeights weights{{3.0, 2.0, 1.0}};
    MechanismKind mechanism = MechanismKind::fedor;
    double flat_fee = 0.0;
    GoFConfig gof{};
    std::uint64_t master_seed = 0;

    std::size_t slots() const { return weights.size(); }

    void validate() const {
        if (slots() < 1 || slots() >= players) {
            throw ConfigError("MechanismConfig: need 1 <= k < n (k=" + std::to_string(slots()) +
                              ", n=" + std::to_string(players) + ")");
        }
        if (!(flat_fee >= 0.0) || !std::isfinite(flat_fee)) {
            throw ConfigError("MechanismConfig: flat fee must be non-negative");
        }
        gof.validate();
    }
};

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            carry_ += (sum_ - t) + x;
        } else {
            carry_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// theta * w_slot - payment, or -payment when no slot was won.
inline double per_round_utility(PlayerType theta, std::optional<SlotIndex> slot, const SlotWeights& weights,
                                double payment) {
    if (!slot) return -payment;
    if (*slot >= weights.size()) {
        throw ConfigError("per_round_utility: slot index " + std::to_string(*slot) + " out of range (k=" +
                          std::to_string(weights.size()) + ")");
    }
    return theta.value() * weights[*slot] - payment;
}

/// Cumulative utilities and per-slot win counts for one experiment.
class UtilityLedger {
public:
    UtilityLedger(std::size_t players, std::size_t slots)
        : slots_(slots), player_(players), wins_(players * slots, 0) {}

    void credit_player(PlayerId i, double amount) { player_.at(i).add(amount); }
    void credit_seller(double amount) { seller_.add(amount); }
    void record_win(PlayerId i, SlotIndex j) { ++wins_.at(i * slots_ + j); }
    void close_round() { ++rounds_; }

    std::size_t players() const { return player_.size(); }
    std::size_t slots() const { return slots_; }
    std::uint64_t rounds() const { return rounds_; }
    double player_utility(PlayerId i) const { return player_.at(i).value(); }
    double seller_utility() const { return seller_.value(); }
    std::uint64_t slot_wins(PlayerId i, SlotIndex j) const { return wins_.at(i * slots_ + j); }

    /// Sum over players for one slot; equals rounds() after every completed round.
    std::uint64_t slot_total(SlotIndex j) const {
        std::uint64_t total = 0;
        for (PlayerId i = 0; i < players(); ++i) total += slot_wins(i, j);
        return total;
    }

private:
    std::size_t slots_;
    std::vector<CompensatedSum> player_;
    CompensatedSum seller_;
    std::vector<std::uint64_t> wins_;
    std::uint64_t rounds_ = 0;
};

} // namespace fedor
