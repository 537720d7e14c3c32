#pragma once

#include "fedor/core.hpp"
#include "fedor/error.hpp"
#include "fedor/gof.hpp"
#include "fedor/mechanisms.hpp"
#include "fedor/rng.hpp"
#include "fedor/strategies.hpp"

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace fedor {

enum class GateKind {
    ks,      // sliding-window Kolmogorov-Smirnov test
    perfect, // oracle that knows each strategy and fails exactly the unfaithful reporters
};

struct ScenarioConfig {
    std::string label = "custom";
    std::vector<StrategySpec> strategies;
    MechanismConfig mechanism{};
    std::uint64_t rounds = 10000;
    std::uint64_t experiments = 100;
    GateKind gate = GateKind::ks;

    std::size_t players() const { return mechanism.players; }

    void validate() const {
        mechanism.validate();
        if (strategies.size() != mechanism.players) {
            throw ConfigError("scenario '" + label + "': " + std::to_string(strategies.size()) +
                              " strategies for " + std::to_string(mechanism.players) + " players");
        }
        for (const auto& s : strategies) s.validate();
        if (rounds == 0) throw ConfigError("scenario '" + label + "': rounds must be positive");
        if (experiments == 0) throw ConfigError("scenario '" + label + "': experiments must be positive");
    }

    bool uses_history() const { return mechanism.mechanism == MechanismKind::fedor && gate == GateKind::ks; }
};

// ---------------------------------------------------------------------------
// Deterministic per-round inputs. Both the centralized engine and the replica
// nodes in netsim draw through these, keyed by (seed, experiment, player, round).
// ---------------------------------------------------------------------------

inline PlayerType true_type_for(const ScenarioConfig& cfg, std::uint64_t experiment, PlayerId player,
                                std::uint64_t round) {
    CounterRng rng(StreamKey{cfg.mechanism.master_seed, experiment, player, Purpose::true_type, round});
    return draw_true_type(rng);
}

inline double bid_for(const ScenarioConfig& cfg, std::uint64_t experiment, PlayerId player, std::uint64_t round,
                      PlayerType theta) {
    CounterRng rng(StreamKey{cfg.mechanism.master_seed, experiment, player, Purpose::declaration, round});
    return declare(cfg.strategies[player], theta, rng);
}

/// The w-th value used to pre-fill a player's history before scored rounds.
inline double warmup_bid_for(const ScenarioConfig& cfg, std::uint64_t experiment, PlayerId player,
                             std::uint64_t w) {
    CounterRng type_rng(StreamKey{cfg.mechanism.master_seed, experiment, player, Purpose::warmup_type, w});
    CounterRng decl_rng(StreamKey{cfg.mechanism.master_seed, experiment, player, Purpose::warmup_declaration, w});
    return declare(cfg.strategies[player], draw_true_type(type_rng), decl_rng);
}

inline std::vector<bool> perfect_verdicts(std::span<const StrategySpec> strategies) {
    std::vector<bool> v(strategies.size());
    for (std::size_t i = 0; i < strategies.size(); ++i) v[i] = strategies[i].reports_faithful_uniform();
    return v;
}

struct RoundRecord {
    std::uint64_t round = 0;
    std::vector<double> true_types;
    BidVector bids;
    std::vector<bool> verdicts; // FEDoR only
    AllocationOutcome outcome;
    std::vector<double> utilities;
    double seller = 0.0;
    double welfare = 0.0; // sum_j theta_{d_j} w_j
};

struct PlayerReport {
    PlayerId player = 0;
    StrategySpec strategy;
    double cumulative_utility = 0.0;
    double per_round_mean = 0.0;
    std::vector<std::uint64_t> slot_wins;
    std::uint64_t gof_rejections = 0;

    friend bool operator==(const PlayerReport&, const PlayerReport&) = default;
};

struct ExperimentReport {
    std::string label;
    MechanismKind mechanism = MechanismKind::fedor;
    std::uint64_t experiment = 0;
    std::uint64_t rounds = 0;
    std::vector<PlayerReport> players;
    double seller_utility = 0.0;
    double social_utility = 0.0; // sum of players' net utilities
    double welfare = 0.0;        // allocated value, before transfers

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// One experiment's mutable state: ledger, GoF histories, round counter.
class Experiment {
public:
    Experiment(const ScenarioConfig& config, std::uint64_t experiment_index)
        : cfg_(config), experiment_(experiment_index),
          ledger_(config.mechanism.players, config.mechanism.slots()),
          rejections_(config.mechanism.players, 0) {
        cfg_.validate();
        if (cfg_.uses_history()) {
            const std::size_t h = cfg_.mechanism.gof.history_length;
            histories_.reserve(cfg_.players());
            for (PlayerId i = 0; i < cfg_.players(); ++i) {
                histories_.emplace_back(h);
                for (std::uint64_t w = 0; w < h; ++w) histories_[i].record(warmup_bid_for(cfg_, experiment_, i, w));
            }
        }
    }

    /// Draws types, applies strategies, and settles the next round.
    RoundRecord run_round() {
        const std::size_t n = cfg_.players();
        std::vector<double> types(n);
        BidVector bids{round_, std::vector<double>(n)};
        for (PlayerId i = 0; i < n; ++i) {
            const PlayerType theta = true_type_for(cfg_, experiment_, i, round_);
            types[i] = theta.value();
            bids.bids[i] = bid_for(cfg_, experiment_, i, round_, theta);
        }
        return settle(std::move(types), std::move(bids));
    }

    /// Settles one round from explicit types and bids. bids.round is
    /// overwritten with the experiment's round counter.
    RoundRecord settle(std::vector<double> types, BidVector bids) {
        const std::size_t n = cfg_.players();
        const auto& mc = cfg_.mechanism;
        bids.round = round_;
        bids.validate(n);
        if (types.size() != n) throw ArgumentError("settle: one true type per player is required");

        RoundRecord rec;
        rec.round = round_;
        switch (mc.mechanism) {
        case MechanismKind::fedor:
            rec.verdicts = cfg_.gate == GateKind::ks ? gof_verdicts(bids, histories_, mc.gof)
                                                     : perfect_verdicts(cfg_.strategies);
            rec.outcome = fedor_decide(bids, rec.verdicts, mc.weights, mc.flat_fee);
            break;
        case MechanismKind::vcg:
            rec.outcome = vcg_decide(bids, mc.weights);
            break;
        case MechanismKind::gsp:
            rec.outcome = gsp_decide(bids, mc.weights);
            break;
        }

        rec.utilities.resize(n);
        for (PlayerId i = 0; i < n; ++i) {
            const double payment = rec.outcome.payments[i];
            const auto slot = rec.outcome.slot_of(i);
            rec.utilities[i] = per_round_utility(PlayerType(types[i]), slot, mc.weights, payment);
            ledger_.credit_player(i, rec.utilities[i]);
            rec.seller += payment;
            if (slot) {
                ledger_.record_win(i, *slot);
                rec.welfare += types[i] * mc.weights[*slot];
            }
        }
        ledger_.credit_seller(rec.seller);
        welfare_.add(rec.welfare);
        ledger_.close_round();

        if (mc.mechanism == MechanismKind::fedor) {
            for (PlayerId i = 0; i < n; ++i) {
                if (!rec.verdicts[i]) ++rejections_[i];
            }
            // Every report enters the history, rejected or not; replacement values never do.
            for (PlayerId i = 0; i < histories_.size(); ++i) gof_record(histories_[i], bids.bids[i]);
        }

        rec.true_types = std::move(types);
        rec.bids = std::move(bids);
        ++round_;
        return rec;
    }

    const UtilityLedger& ledger() const { return ledger_; }
    std::span<const HistoryBuffer> histories() const { return histories_; }
    std::uint64_t rounds_elapsed() const { return round_; }
    std::uint64_t gof_rejections(PlayerId i) const { return rejections_.at(i); }

    ExperimentReport report() const {
        ExperimentReport r;
        r.label = cfg_.label;
        r.mechanism = cfg_.mechanism.mechanism;
        r.experiment = experiment_;
        r.rounds = round_;
        CompensatedSum social;
        for (PlayerId i = 0; i < cfg_.players(); ++i) {
            PlayerReport p;
            p.player = i;
            p.strategy = cfg_.strategies[i];
            p.cumulative_utility = ledger_.player_utility(i);
            p.per_round_mean = round_ ? p.cumulative_utility / static_cast<double>(round_) : 0.0;
            for (SlotIndex j = 0; j < cfg_.mechanism.slots(); ++j) p.slot_wins.push_back(ledger_.slot_wins(i, j));
            p.gof_rejections = rejections_[i];
            social.add(p.cumulative_utility);
            r.players.push_back(std::move(p));
        }
        r.seller_utility = ledger_.seller_utility();
        r.social_utility = social.value();
        r.welfare = welfare_.value();
        return r;
    }

private:
    ScenarioConfig cfg_;
    std::uint64_t experiment_;
    UtilityLedger ledger_;
    std::vector<HistoryBuffer> histories_;
    std::vector<std::uint64_t> rejections_;
    CompensatedSum welfare_;
    std::uint64_t round_ = 0;
};

inline ExperimentReport run_experiment(const ScenarioConfig& config, std::uint64_t experiment_index) {
    Experiment exp(config, experiment_index);
    for (std::uint64_t r = 0; r < config.rounds; ++r) exp.run_round();
    return exp.report();
}

namespace detail {

/// Runs fn(0..count-1) on up to `jobs` threads. Output order is the caller's concern.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < jobs; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    workers.clear();
    if (failure) std::rethrow_exception(failure);
}

} // namespace detail

/// Runs all configured experiments; reports come back in experiment order
/// regardless of `jobs`.
inline std::vector<ExperimentReport> run_experiments(const ScenarioConfig& config, std::size_t jobs = 1) {
    config.validate();
    std::vector<ExperimentReport> reports(config.experiments);
    detail::parallel_for(reports.size(), jobs, [&](std::size_t e) { reports[e] = run_experiment(config, e); });
    return reports;
}

// ---------------------------------------------------------------------------
// Aggregates
// ---------------------------------------------------------------------------

/// Mean per-round utility of the players matching `pred`, pooled over experiments.
template <typename Pred>
double mean_per_round_utility(std::span<const ExperimentReport> reports, Pred pred) {
    CompensatedSum sum;
    std::size_t count = 0;
    for (const auto& r : reports) {
        for (const auto& p : r.players) {
            if (pred(p)) {
                sum.add(p.per_round_mean);
                ++count;
            }
        }
    }
    return count ? sum.value() / static_cast<double>(count) : 0.0;
}

inline double mean_honest_per_round(std::span<const ExperimentReport> reports) {
    return mean_per_round_utility(reports, [](const PlayerReport& p) { return p.strategy.is_honest(); });
}

inline double mean_seller_per_round(std::span<const ExperimentReport> reports) {
    CompensatedSum sum;
    for (const auto& r : reports) sum.add(r.seller_utility / static_cast<double>(r.rounds));
    return reports.empty() ? 0.0 : sum.value() / static_cast<double>(reports.size());
}

struct FeePoint {
    double fee = 0.0;
    double seller_mean = 0.0; // per round
    double player_mean = 0.0; // honest players, per round
};

/// Seller/player per-round utility pairs across flat fees (FEDoR only).
inline std::vector<FeePoint> fee_sweep(const ScenarioConfig& scenario, std::span<const double> fees,
                                       std::size_t jobs = 1) {
    if (scenario.mechanism.mechanism != MechanismKind::fedor) {
        throw ConfigError("fee_sweep: only the FEDoR mechanism charges a flat fee");
    }
    for (double fee : fees) {
        if (!(fee >= 0.0)) throw ConfigError("fee_sweep: fees must be non-negative");
    }
    std::vector<FeePoint> points;
    for (double fee : fees) {
        ScenarioConfig cfg = scenario;
        cfg.mechanism.flat_fee = fee;
        const auto reports = run_experiments(cfg, jobs);
        points.push_back({fee, mean_seller_per_round(reports), mean_honest_per_round(reports)});
    }
    return points;
}

// ---------------------------------------------------------------------------
// GoF detection rates for a single reporter, as a function of history length
// and p-value threshold.
// ---------------------------------------------------------------------------

struct GofSweepRow {
    std::size_t history = 0;
    double alpha = 0.0;
    StrategySpec strategy;
    double positive_rate = 0.0;
};

struct GofSweepConfig {
    std::vector<std::size_t> histories{100, 500, 1000, 5000};
    std::vector<double> alphas{0.05, 0.1, 0.2};
    std::vector<StrategySpec> strategies{StrategySpec::honest(), StrategySpec::beta_uncorrelated(0.9),
                                         StrategySpec::beta_uncorrelated(0.7), StrategySpec::normal(0.5, 0.15)};
    std::uint64_t rounds = 10000;
    std::uint64_t experiments = 10;
    std::uint64_t seed = 0;
};

/// Number of scored rounds whose p-value fell below each alpha.
inline std::vector<std::uint64_t> gof_rejection_counts(const StrategySpec& strategy, std::size_t history,
                                                       std::span<const double> alphas, std::uint64_t rounds,
                                                       std::uint64_t seed, std::uint64_t experiment,
                                                       std::uint64_t stream) {
    HistoryBuffer buffer(history);
    auto draw = [&](Purpose type_purpose, Purpose decl_purpose, std::uint64_t index) {
        CounterRng type_rng(StreamKey{seed, experiment, stream, type_purpose, index});
        CounterRng decl_rng(StreamKey{seed, experiment, stream, decl_purpose, index});
        return declare(strategy, draw_true_type(type_rng), decl_rng);
    };
    for (std::uint64_t w = 0; w < history; ++w) buffer.record(draw(Purpose::warmup_type, Purpose::warmup_declaration, w));
    std::vector<std::uint64_t> counts(alphas.size(), 0);
    for (std::uint64_t r = 0; r < rounds; ++r) {
        const double bid = draw(Purpose::true_type, Purpose::declaration, r);
        const double p = gof_pvalue(buffer, bid);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
            if (p < alphas[a]) ++counts[a];
        }
        buffer.record(bid);
    }
    return counts;
}

/// Rows ordered by history, then alpha, then strategy.
inline std::vector<GofSweepRow> gof_sweep(const GofSweepConfig& cfg, std::size_t jobs = 1) {
    for (double a : cfg.alphas) {
        if (!(a > 0.0 && a < 1.0)) throw ConfigError("gof_sweep: alpha must lie in (0,1)");
    }
    for (std::size_t h : cfg.histories) {
        if (h < 10) throw ConfigError("gof_sweep: history length must be at least 10");
    }
    if (cfg.rounds == 0 || cfg.experiments == 0) throw ConfigError("gof_sweep: rounds and experiments must be positive");

    const std::size_t cells = cfg.histories.size() * cfg.strategies.size();
    const std::size_t tasks = cells * cfg.experiments;
    std::vector<std::vector<std::uint64_t>> counts(tasks);
    detail::parallel_for(tasks, jobs, [&](std::size_t t) {
        const std::size_t cell = t / cfg.experiments;
        const std::uint64_t e = t % cfg.experiments;
        const std::size_t h = cell / cfg.strategies.size();
        const std::size_t s = cell % cfg.strategies.size();
        counts[t] = gof_rejection_counts(cfg.strategies[s], cfg.histories[h], cfg.alphas, cfg.rounds, cfg.seed, e, s);
    });

    std::vector<GofSweepRow> rows;
    const double total = static_cast<double>(cfg.rounds * cfg.experiments);
    for (std::size_t h = 0; h < cfg.histories.size(); ++h) {
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
            for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
                std::uint64_t hits = 0;
                const std::size_t cell = h * cfg.strategies.size() + s;
                for (std::uint64_t e = 0; e < cfg.experiments; ++e) hits += counts[cell * cfg.experiments + e][a];
                rows.push_back({cfg.histories[h], cfg.alphas[a], cfg.strategies[s], static_cast<double>(hits) / total});
            }
        }
    }
    return rows;
}

} // namespace fedor
