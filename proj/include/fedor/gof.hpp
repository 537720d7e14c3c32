#pragma once

#include "fedor/error.hpp"
#include "fedor/stats.hpp"

#include <algorithm>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

namespace fedor {

enum class WarmupPolicy {
    prefill, // histories are filled from the player's own strategy before scoring
    accept,  // an under-filled window accepts every candidate (unit tests only)
};

struct GoFConfig {
    std::size_t history_length = 1000;
    double p_threshold = 0.1;
    WarmupPolicy warmup = WarmupPolicy::prefill;

    void validate() const {
        if (history_length < 10) {
            throw ConfigError("GoF history length must be at least 10");
        }
        if (!(p_threshold > 0.0 && p_threshold < 1.0)) {
            throw ConfigError("GoF p-value threshold must lie in (0,1)");
        }
    }

    friend bool operator==(const GoFConfig&, const GoFConfig&) = default;
};

/// Sliding window of one player's most recent reports. Keeps an ascending copy
/// alongside the arrival order so each KS evaluation is a single linear pass.
class HistoryBuffer {
public:
    explicit HistoryBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) {
            throw ConfigError("HistoryBuffer capacity must be positive");
        }
        sorted_.reserve(capacity + 1);
    }

    void record(double value) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw ArgumentError("HistoryBuffer: recorded value must lie in [0,1]");
        }
        if (order_.size() == capacity_) {
            const double oldest = order_.front();
            order_.pop_front();
            sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), oldest));
        }
        order_.push_back(value);
        sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), value), value);
    }

    std::size_t size() const { return order_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool full() const { return order_.size() == capacity_; }
    bool empty() const { return order_.empty(); }

    /// Window contents, oldest first.
    std::vector<double> window() const { return {order_.begin(), order_.end()}; }
    std::span<const double> sorted() const { return sorted_; }

    friend bool operator==(const HistoryBuffer& a, const HistoryBuffer& b) {
        return a.capacity_ == b.capacity_ && a.order_ == b.order_;
    }

private:
    std::size_t capacity_;
    std::deque<double> order_;
    std::vector<double> sorted_;
};

/// KS p-value of (window ∪ {candidate}) against Uniform[0,1].
inline double gof_pvalue(const HistoryBuffer& buffer, double candidate) {
    if (!(candidate >= 0.0 && candidate <= 1.0)) {
        throw ArgumentError("gof_check: candidate must lie in [0,1]");
    }
    const double d = stats::ks_statistic_with(buffer.sorted(), candidate);
    return stats::ks_pvalue(d, buffer.size() + 1);
}

/// True when the candidate report is consistent with a uniform reporter.
inline bool gof_check(const HistoryBuffer& buffer, double candidate, const GoFConfig& config) {
    if (!(candidate >= 0.0 && candidate <= 1.0)) {
        throw ArgumentError("gof_check: candidate must lie in [0,1]");
    }
    if (config.warmup == WarmupPolicy::accept && buffer.size() < config.history_length) {
        return true;
    }
    return gof_pvalue(buffer, candidate) >= config.p_threshold;
}

inline void gof_record(HistoryBuffer& buffer, double value) { buffer.record(value); }

} // namespace fedor
