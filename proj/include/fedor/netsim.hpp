#pragma once

#include "fedor/core.hpp"
#include "fedor/engine.hpp"
#include "fedor/error.hpp"
#include "fedor/gof.hpp"
#include "fedor/mechanisms.hpp"
#include "fedor/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fedor::netsim {

/// Wire layout (18 bytes, big-endian): round u64 | player u16 | bid binary64.
struct BidMessage {
    static constexpr std::size_t wire_size = 18;
    using Wire = std::array<std::uint8_t, wire_size>;

    std::uint64_t round = 0;
    std::uint16_t player = 0;
    double bid = 0.0;

    Wire encode() const {
        Wire w{};
        const std::uint64_t bits = std::bit_cast<std::uint64_t>(bid);
        for (int b = 0; b < 8; ++b) w[b] = static_cast<std::uint8_t>(round >> (56 - 8 * b));
        w[8] = static_cast<std::uint8_t>(player >> 8);
        w[9] = static_cast<std::uint8_t>(player);
        for (int b = 0; b < 8; ++b) w[10 + b] = static_cast<std::uint8_t>(bits >> (56 - 8 * b));
        return w;
    }

    static BidMessage decode(const Wire& w) {
        BidMessage m;
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) m.round = (m.round << 8) | w[b];
        m.player = static_cast<std::uint16_t>((w[8] << 8) | w[9]);
        for (int b = 0; b < 8; ++b) bits = (bits << 8) | w[10 + b];
        m.bid = std::bit_cast<double>(bits);
        return m;
    }

    friend bool operator==(const BidMessage& a, const BidMessage& b) {
        return a.encode() == b.encode();
    }
};

/// Round-synchronized reliable broadcast. Messages sent before deliver() reach
/// every node's inbox in a per-node pseudorandom order.
class BroadcastBus {
public:
    BroadcastBus(std::size_t nodes, std::uint64_t seed) : seed_(seed), inboxes_(nodes) {}

    void send(const BidMessage& msg) { outbox_.push_back(msg.encode()); }

    /// Fault injection: the next delivery skips the message from `from` to `to`.
    void drop_next(PlayerId from, PlayerId to) { drops_.insert({from, to}); }

    /// Barrier between the send and compute phases of `round`.
    void deliver(std::uint64_t round) {
        for (PlayerId node = 0; node < inboxes_.size(); ++node) {
            auto& inbox = inboxes_[node];
            inbox.clear();
            for (const auto& wire : outbox_) {
                const auto from = BidMessage::decode(wire).player;
                if (drops_.count({from, node}) == 0) inbox.push_back(wire);
            }
            // Fisher-Yates with a (seed, round, node)-keyed stream.
            CounterRng rng(StreamKey{seed_, round, node, Purpose::delivery, 0});
            for (std::size_t i = inbox.size(); i > 1; --i) {
                const std::size_t j = static_cast<std::size_t>(rng() % i);
                std::swap(inbox[i - 1], inbox[j]);
            }
        }
        outbox_.clear();
        drops_.clear();
    }

    std::span<const BidMessage::Wire> inbox(PlayerId node) const { return inboxes_.at(node); }
    std::size_t nodes() const { return inboxes_.size(); }

private:
    std::uint64_t seed_;
    std::vector<BidMessage::Wire> outbox_;
    std::vector<std::vector<BidMessage::Wire>> inboxes_;
    std::set<std::pair<PlayerId, PlayerId>> drops_;
};

/// One replica: a player that also runs the full mechanism locally.
class Node {
public:
    Node(PlayerId id, const ScenarioConfig& cfg, std::uint64_t experiment)
        : id_(id), cfg_(cfg), experiment_(experiment), gof_(cfg.mechanism.gof) {
        if (cfg_.uses_history()) {
            for (PlayerId i = 0; i < cfg_.players(); ++i) histories_.emplace_back(gof_.history_length);
        }
    }

    PlayerId id() const { return id_; }

    /// Replaces this node's GoF parameters (negative-control experiments only).
    void set_gof_config(const GoFConfig& gof) { gof_ = gof; }

    BidMessage warmup_message(std::uint64_t w) const {
        return {w, static_cast<std::uint16_t>(id_), warmup_bid_for(cfg_, experiment_, id_, w)};
    }

    /// Observe type, apply own strategy, produce the bid to broadcast.
    BidMessage bid_message(std::uint64_t round) const {
        const PlayerType theta = true_type_for(cfg_, experiment_, id_, round);
        return {round, static_cast<std::uint16_t>(id_), bid_for(cfg_, experiment_, id_, round, theta)};
    }

    void absorb_warmup(std::uint64_t w, std::span<const BidMessage::Wire> inbox) {
        if (histories_.empty()) return;
        const auto bids = reassemble(w, inbox);
        for (PlayerId i = 0; i < bids.size(); ++i) histories_[i].record(bids[i]);
    }

    /// Reassemble the bid vector by player id, decide, update histories.
    const AllocationOutcome& compute(std::uint64_t round, std::span<const BidMessage::Wire> inbox) {
        BidVector bids{round, reassemble(round, inbox)};
        std::vector<bool> verdicts;
        if (cfg_.gate == GateKind::ks) {
            verdicts.resize(bids.size());
            for (PlayerId i = 0; i < bids.size(); ++i) verdicts[i] = gof_check(histories_[i], bids.bids[i], gof_);
        } else {
            verdicts = perfect_verdicts(cfg_.strategies);
        }
        last_ = fedor_decide(bids, verdicts, cfg_.mechanism.weights, cfg_.mechanism.flat_fee);
        for (PlayerId i = 0; i < histories_.size(); ++i) histories_[i].record(bids.bids[i]);
        return last_;
    }

    const AllocationOutcome& last_outcome() const { return last_; }
    std::span<const HistoryBuffer> histories() const { return histories_; }

private:
    std::vector<double> reassemble(std::uint64_t round, std::span<const BidMessage::Wire> inbox) const {
        std::vector<std::optional<double>> slots(cfg_.players());
        for (const auto& wire : inbox) {
            const auto msg = BidMessage::decode(wire);
            if (msg.round != round) {
                throw ProtocolError("node " + std::to_string(id_) + ": message for round " +
                                    std::to_string(msg.round) + " during round " + std::to_string(round));
            }
            if (msg.player >= slots.size() || slots[msg.player]) {
                throw ProtocolError("node " + std::to_string(id_) + ": unexpected or duplicate message from player " +
                                    std::to_string(msg.player));
            }
            slots[msg.player] = msg.bid;
        }
        std::vector<double> bids(slots.size());
        for (PlayerId i = 0; i < slots.size(); ++i) {
            if (!slots[i]) {
                throw ProtocolError("node " + std::to_string(id_) + ": no bid from player " + std::to_string(i) +
                                    " in round " + std::to_string(round));
            }
            bids[i] = *slots[i];
        }
        return bids;
    }

    PlayerId id_;
    ScenarioConfig cfg_;
    std::uint64_t experiment_;
    GoFConfig gof_;
    std::vector<HistoryBuffer> histories_;
    AllocationOutcome last_;
};

/// Per-node outcomes of one round, indexed by node id.
using RoundTrace = std::vector<AllocationOutcome>;

/// n replica nodes sharing one broadcast bus; FEDoR only.
class Network {
public:
    Network(const ScenarioConfig& cfg, std::uint64_t experiment)
        : cfg_(cfg), bus_(cfg.players(), cfg.mechanism.master_seed) {
        cfg_.validate();
        if (cfg_.mechanism.mechanism != MechanismKind::fedor) {
            throw ConfigError("netsim: replicated execution is defined for FEDoR only");
        }
        for (PlayerId i = 0; i < cfg_.players(); ++i) nodes_.emplace_back(i, cfg_, experiment);
    }

    /// Gossip H warmup reports per player so every replica starts from the same histories.
    void warmup() {
        if (!cfg_.uses_history()) return;
        for (std::uint64_t w = 0; w < cfg_.mechanism.gof.history_length; ++w) {
            for (const auto& node : nodes_) bus_.send(node.warmup_message(w));
            bus_.deliver(w);
            for (auto& node : nodes_) node.absorb_warmup(w, bus_.inbox(node.id()));
        }
    }

    RoundTrace step_round(std::uint64_t round) {
        for (const auto& node : nodes_) bus_.send(node.bid_message(round));
        bus_.deliver(round);
        RoundTrace trace;
        trace.reserve(nodes_.size());
        for (auto& node : nodes_) trace.push_back(node.compute(round, bus_.inbox(node.id())));
        return trace;
    }

    Node& node(PlayerId i) { return nodes_.at(i); }
    BroadcastBus& bus() { return bus_; }
    std::size_t size() const { return nodes_.size(); }

private:
    ScenarioConfig cfg_;
    BroadcastBus bus_;
    std::vector<Node> nodes_;
};

namespace detail {

inline bool bit_identical(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
    }
    return true;
}

} // namespace detail

inline bool identical_outcomes(const AllocationOutcome& a, const AllocationOutcome& b) {
    return a.assignment == b.assignment && detail::bit_identical(a.payments, b.payments) &&
           detail::bit_identical(a.decision_values, b.decision_values);
}

/// True iff, in every round, all nodes produced bit-identical outcomes and decision vectors.
inline bool agreement_audit(std::span<const RoundTrace> trace) {
    for (const auto& round : trace) {
        for (std::size_t i = 1; i < round.size(); ++i) {
            if (!identical_outcomes(round[0], round[i])) return false;
        }
    }
    return true;
}

/// Runs `rounds` rounds of a fresh network (warmup included).
inline std::vector<RoundTrace> run_network(const ScenarioConfig& cfg, std::uint64_t experiment, std::uint64_t rounds) {
    Network net(cfg, experiment);
    net.warmup();
    std::vector<RoundTrace> trace;
    trace.reserve(rounds);
    for (std::uint64_t r = 0; r < rounds; ++r) trace.push_back(net.step_round(r));
    return trace;
}

} // namespace fedor::netsim
