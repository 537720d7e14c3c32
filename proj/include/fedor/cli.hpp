#pragma once

#include "fedor/core.hpp"
#include "fedor/engine.hpp"
#include "fedor/error.hpp"
#include "fedor/mechanisms.hpp"
#include "fedor/strategies.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedor::cli {

inline constexpr std::string_view tool_version = "0.1.0";

// ---------------------------------------------------------------------------
// Scenario catalog: the ten reference populations, n=9, k=3, w=(3,2,1).
// Cheaters occupy the highest player indices.
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& catalog_labels() {
    static const std::vector<std::string> labels{"A", "B", "C", "D", "E", "F", "G", "H", "I", "J"};
    return labels;
}

inline ScenarioConfig scenario_catalog(std::string_view label) {
    const auto normal = StrategySpec::normal(0.5, 0.15);
    const auto beta09 = StrategySpec::beta_uncorrelated(0.9);
    const auto beta07 = StrategySpec::beta_uncorrelated(0.7);
    const auto uniform = StrategySpec::random_uniform();

    std::vector<StrategySpec> cheaters;
    if (label == "A") {
    } else if (label == "B") {
        cheaters = {normal};
    } else if (label == "C") {
        cheaters = {beta09};
    } else if (label == "D") {
        cheaters = {beta07};
    } else if (label == "E") {
        cheaters = {uniform};
    } else if (label == "F") {
        cheaters = {uniform, uniform, uniform};
    } else if (label == "G") {
        cheaters = {beta09, beta09, beta09};
    } else if (label == "H") {
        cheaters = {beta07, beta07, beta07};
    } else if (label == "I") {
        cheaters = {normal, normal, normal};
    } else if (label == "J") {
        cheaters = {uniform, beta09, beta07, normal};
    } else {
        throw ConfigError("unknown scenario label '" + std::string(label) + "' (expected A..J)");
    }

    ScenarioConfig cfg;
    cfg.label = std::string(label);
    cfg.strategies.assign(9 - cheaters.size(), StrategySpec::honest());
    cfg.strategies.insert(cfg.strategies.end(), cheaters.begin(), cheaters.end());
    cfg.mechanism.players = 9;
    cfg.mechanism.weights = SlotWeights({3.0, 2.0, 1.0});
    cfg.mechanism.gof = GoFConfig{1000, 0.1, WarmupPolicy::prefill};
    cfg.rounds = 10000;
    cfg.experiments = 100;
    cfg.gate = GateKind::ks;
    return cfg;
}

/// Honest population of n players, weights (k, ..., 1).
inline ScenarioConfig honest_population(std::size_t n, std::size_t k) {
    ScenarioConfig cfg;
    cfg.label = "n" + std::to_string(n) + "k" + std::to_string(k);
    cfg.strategies.assign(n, StrategySpec::honest());
    cfg.mechanism.players = n;
    cfg.mechanism.weights = SlotWeights::descending(k);
    cfg.gate = GateKind::perfect;
    return cfg;
}

/// (n, k) grid of the seller/player tradeoff study: n=9 with k=1..8, then k=3 with n=4..8.
inline std::vector<std::pair<std::size_t, std::size_t>> tradeoff_grid() {
    std::vector<std::pair<std::size_t, std::size_t>> grid;
    for (std::size_t k = 1; k <= 8; ++k) grid.emplace_back(9, k);
    for (std::size_t n = 4; n <= 8; ++n) grid.emplace_back(n, 3);
    return grid;
}

// ---------------------------------------------------------------------------
// Formatting and parsing helpers
// ---------------------------------------------------------------------------

/// 17 significant digits: lossless for binary64.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_list(std::string_view text, char sep = ',') {
    std::vector<std::string> out;
    if (text.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw ConfigError("invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return v;
}

inline std::uint64_t parse_u64(std::string_view text, std::string_view what) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw ConfigError("invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return v;
}

inline std::vector<double> parse_double_list(std::string_view text, std::string_view what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(item, what));
    return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ',';
        out += fmt(items[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run options / manifest
// ---------------------------------------------------------------------------

enum class Command { scenarios, fee_sweep, gof_sweep, compare };

inline std::string_view to_string(Command c) {
    switch (c) {
    case Command::scenarios: return "scenarios";
    case Command::fee_sweep: return "fee-sweep";
    case Command::gof_sweep: return "gof-sweep";
    case Command::compare: return "compare";
    }
    return "unknown";
}

inline Command parse_command(std::string_view text) {
    if (text == "scenarios") return Command::scenarios;
    if (text == "fee-sweep") return Command::fee_sweep;
    if (text == "gof-sweep") return Command::gof_sweep;
    if (text == "compare") return Command::compare;
    throw ConfigError("unknown command '" + std::string(text) + "'");
}

/// Fully resolved parameters of one CLI invocation. Unset optionals mean
/// "use the command's default grid".
struct RunOptions {
    Command command = Command::scenarios;
    std::vector<std::string> labels;                 // empty: A..J (or custom population)
    std::vector<MechanismKind> mechanisms;           // empty: all three
    std::optional<std::size_t> players;
    std::optional<std::size_t> slots;
    std::optional<std::vector<double>> weights;
    std::vector<double> fees{0.0};
    std::uint64_t rounds = 10000;
    std::uint64_t experiments = 100;
    std::vector<std::size_t> histories{1000};
    std::vector<double> pvalues{0.1};
    std::uint64_t seed = 0;
    bool perfect_gof = false;
    std::map<std::size_t, StrategySpec> custom_strategies; // player.<i>.strategy
    std::size_t jobs = 1;
    std::filesystem::path out = ".";
};

/// Applies one key=value setting (config files, manifests).
inline void apply_setting(RunOptions& opt, std::string_view key, std::string_view value) {
    if (key == "tool_version") return;
    if (key == "command") {
        opt.command = parse_command(value);
    } else if (key == "label") {
        opt.labels = split_list(value);
    } else if (key == "mechanism") {
        opt.mechanisms.clear();
        for (const auto& m : split_list(value)) opt.mechanisms.push_back(parse_mechanism(m));
    } else if (key == "players") {
        opt.players = parse_u64(value, "players");
    } else if (key == "slots") {
        opt.slots = parse_u64(value, "slots");
    } else if (key == "weights") {
        opt.weights = parse_double_list(value, "weights");
    } else if (key == "fee") {
        opt.fees = parse_double_list(value, "fee");
    } else if (key == "rounds") {
        opt.rounds = parse_u64(value, "rounds");
    } else if (key == "experiments") {
        opt.experiments = parse_u64(value, "experiments");
    } else if (key == "history") {
        opt.histories.clear();
        for (const auto& h : split_list(value)) opt.histories.push_back(parse_u64(h, "history"));
    } else if (key == "pvalue") {
        opt.pvalues = parse_double_list(value, "pvalue");
    } else if (key == "seed") {
        opt.seed = parse_u64(value, "seed");
    } else if (key == "perfect_gof") {
        if (value != "true" && value != "false") throw ConfigError("perfect_gof must be true or false");
        opt.perfect_gof = value == "true";
    } else if (key.starts_with("player.") && key.ends_with(".strategy")) {
        const auto index = key.substr(7, key.size() - 7 - 9);
        opt.custom_strategies[parse_u64(index, "player index")] = parse_strategy(value);
    } else if (key.starts_with("out.")) {
        // output listing in manifests; informational only
    } else {
        throw ConfigError("unknown configuration key '" + std::string(key) + "'");
    }
}

/// Flat key=value text; '#' starts a comment line.
inline void load_settings(RunOptions& opt, std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        apply_setting(opt, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    }
}

inline void load_settings_file(RunOptions& opt, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    load_settings(opt, in);
}

/// Canonical manifest body (everything that determines the outputs).
inline std::string manifest_body(const RunOptions& opt) {
    std::ostringstream os;
    os << "tool_version=" << tool_version << '\n';
    os << "command=" << to_string(opt.command) << '\n';
    if (!opt.labels.empty()) os << "label=" << join(opt.labels, [](const std::string& s) { return s; }) << '\n';
    if (!opt.mechanisms.empty()) {
        os << "mechanism=" << join(opt.mechanisms, [](MechanismKind m) { return std::string(fedor::to_string(m)); })
           << '\n';
    }
    if (opt.players) os << "players=" << *opt.players << '\n';
    if (opt.slots) os << "slots=" << *opt.slots << '\n';
    if (opt.weights) os << "weights=" << join(*opt.weights, format_double) << '\n';
    os << "fee=" << join(opt.fees, format_double) << '\n';
    os << "rounds=" << opt.rounds << '\n';
    os << "experiments=" << opt.experiments << '\n';
    os << "history=" << join(opt.histories, [](std::size_t h) { return std::to_string(h); }) << '\n';
    os << "pvalue=" << join(opt.pvalues, format_double) << '\n';
    os << "seed=" << opt.seed << '\n';
    os << "perfect_gof=" << (opt.perfect_gof ? "true" : "false") << '\n';
    for (const auto& [i, s] : opt.custom_strategies) os << "player." << i << ".strategy=" << to_string(s) << '\n';
    return os.str();
}

inline std::string manifest_hash(const RunOptions& opt) {
    const std::string body = manifest_body(opt);
    const auto h = fnv1a64({reinterpret_cast<const std::uint8_t*>(body.data()), body.size()});
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Scenario resolution
// ---------------------------------------------------------------------------

inline SlotWeights resolve_weights(const RunOptions& opt, std::size_t default_k) {
    if (opt.weights) {
        SlotWeights w(*opt.weights);
        if (opt.slots && *opt.slots != w.size()) {
            throw ConfigError("--slots disagrees with the number of --weights");
        }
        return w;
    }
    return SlotWeights::descending(opt.slots.value_or(default_k));
}

/// Scenario for one label and mechanism after applying overrides.
inline ScenarioConfig resolve_scenario(const RunOptions& opt, const std::string& label, MechanismKind mechanism) {
    ScenarioConfig cfg;
    if (label == "custom") {
        if (opt.custom_strategies.empty()) throw ConfigError("custom scenario needs player.<i>.strategy entries");
        const std::size_t n = opt.custom_strategies.rbegin()->first + 1;
        if (opt.custom_strategies.size() != n) throw ConfigError("player.<i>.strategy indices must be 0..n-1");
        cfg = scenario_catalog("A");
        cfg.label = "custom";
        cfg.strategies.clear();
        for (const auto& [i, s] : opt.custom_strategies) cfg.strategies.push_back(s);
        cfg.mechanism.players = n;
    } else {
        cfg = scenario_catalog(label);
    }
    if (opt.players && *opt.players != cfg.players()) {
        throw ConfigError("--players " + std::to_string(*opt.players) + " does not match scenario '" + label +
                          "' population of " + std::to_string(cfg.players()));
    }
    if (opt.weights || opt.slots) cfg.mechanism.weights = resolve_weights(opt, 3);
    cfg.mechanism.mechanism = mechanism;
    cfg.mechanism.flat_fee = opt.fees.empty() ? 0.0 : opt.fees.front();
    cfg.mechanism.gof.history_length = opt.histories.empty() ? 1000 : opt.histories.front();
    cfg.mechanism.gof.p_threshold = opt.pvalues.empty() ? 0.1 : opt.pvalues.front();
    cfg.mechanism.master_seed = opt.seed;
    cfg.rounds = opt.rounds;
    cfg.experiments = opt.experiments;
    cfg.gate = opt.perfect_gof ? GateKind::perfect : GateKind::ks;
    cfg.validate();
    return cfg;
}

inline std::vector<std::pair<std::size_t, std::size_t>> resolve_grid(const RunOptions& opt) {
    if (opt.players || opt.slots || opt.weights) {
        const std::size_t k = opt.weights ? opt.weights->size() : opt.slots.value_or(3);
        return {{opt.players.value_or(9), k}};
    }
    return tradeoff_grid();
}

inline ScenarioConfig resolve_population(const RunOptions& opt, std::size_t n, std::size_t k, MechanismKind m) {
    ScenarioConfig cfg = honest_population(n, k);
    if (opt.weights) cfg.mechanism.weights = SlotWeights(*opt.weights);
    cfg.mechanism.mechanism = m;
    cfg.mechanism.master_seed = opt.seed;
    cfg.rounds = opt.rounds;
    cfg.experiments = opt.experiments;
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Collects output files so a failed run leaves nothing half-written behind.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::ofstream& open(const std::string& name) {
        std::filesystem::create_directories(dir_);
        names_.push_back(name);
        streams_.emplace_back(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!streams_.back()) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
        return streams_.back();
    }

    void commit() {
        for (auto& s : streams_) {
            s.flush();
            if (!s) throw std::runtime_error("write failure in " + dir_.string());
            s.close();
        }
        committed_ = true;
    }

    const std::vector<std::string>& names() const { return names_; }

    ~OutputSet() {
        if (committed_) return;
        for (auto& s : streams_) s.close();
        std::error_code ec;
        for (const auto& n : names_) std::filesystem::remove(dir_ / n, ec);
    }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
    std::deque<std::ofstream> streams_; // stable references across open()
    bool committed_ = false;
};

inline void write_csv_preamble(std::ostream& os, const std::string& hash, std::string_view header) {
    os << "# manifest " << hash << '\n' << header << '\n';
}

inline std::vector<std::string> default_labels(const RunOptions& opt) {
    if (!opt.labels.empty()) return opt.labels;
    if (!opt.custom_strategies.empty()) return {"custom"};
    return catalog_labels();
}

inline std::vector<MechanismKind> default_mechanisms(const RunOptions& opt) {
    if (!opt.mechanisms.empty()) return opt.mechanisms;
    return {MechanismKind::fedor, MechanismKind::vcg, MechanismKind::gsp};
}

inline void cmd_scenarios(const RunOptions& opt, OutputSet& out, const std::string& hash) {
    // Resolve everything first so configuration errors surface before any run.
    std::vector<ScenarioConfig> runs;
    for (const auto& label : default_labels(opt)) {
        for (MechanismKind m : default_mechanisms(opt)) runs.push_back(resolve_scenario(opt, label, m));
    }
    std::size_t k = runs.front().mechanism.slots();
    std::string header = "scenario,mechanism,experiment,player,strategy,cumulative_utility,per_round_mean";
    for (std::size_t j = 1; j <= k; ++j) header += ",slot" + std::to_string(j) + "_wins";
    header += ",gof_rejections";

    auto& players = out.open("scenarios.csv");
    auto& social = out.open("social.csv");
    write_csv_preamble(players, hash, header);
    write_csv_preamble(social, hash, "scenario,mechanism,experiment,social_utility");
    for (const auto& cfg : runs) {
        const auto reports = run_experiments(cfg, opt.jobs);
        for (const auto& r : reports) {
            for (const auto& p : r.players) {
                players << r.label << ',' << fedor::to_string(r.mechanism) << ',' << r.experiment << ','
                        << p.player + 1 << ',' << to_string(p.strategy) << ',' << format_double(p.cumulative_utility)
                        << ',' << format_double(p.per_round_mean);
                for (auto w : p.slot_wins) players << ',' << w;
                players << ',' << p.gof_rejections << '\n';
            }
            social << r.label << ',' << fedor::to_string(r.mechanism) << ',' << r.experiment << ','
                   << format_double(r.social_utility) << '\n';
        }
    }
}

inline void cmd_fee_sweep(const RunOptions& opt, OutputSet& out, const std::string& hash) {
    std::vector<ScenarioConfig> runs;
    for (auto [n, k] : resolve_grid(opt)) runs.push_back(resolve_population(opt, n, k, MechanismKind::fedor));
    auto& os = out.open("fee_sweep.csv");
    write_csv_preamble(os, hash, "n,k,fee,seller_mean,player_mean");
    for (const auto& cfg : runs) {
        for (const auto& p : fee_sweep(cfg, opt.fees, opt.jobs)) {
            os << cfg.players() << ',' << cfg.mechanism.slots() << ',' << format_double(p.fee) << ','
               << format_double(p.seller_mean) << ',' << format_double(p.player_mean) << '\n';
        }
    }
}

inline void cmd_compare(const RunOptions& opt, OutputSet& out, const std::string& hash) {
    std::vector<ScenarioConfig> runs;
    for (auto [n, k] : resolve_grid(opt)) {
        for (MechanismKind m : default_mechanisms(opt)) runs.push_back(resolve_population(opt, n, k, m));
    }
    auto& os = out.open("compare.csv");
    write_csv_preamble(os, hash, "n,k,mechanism,seller_mean,player_mean");
    for (const auto& cfg : runs) {
        const auto reports = run_experiments(cfg, opt.jobs);
        os << cfg.players() << ',' << cfg.mechanism.slots() << ',' << fedor::to_string(cfg.mechanism.mechanism) << ','
           << format_double(mean_seller_per_round(reports)) << ',' << format_double(mean_honest_per_round(reports))
           << '\n';
    }
}

inline void cmd_gof_sweep(const RunOptions& opt, OutputSet& out, const std::string& hash) {
    GofSweepConfig cfg;
    cfg.histories = opt.histories;
    cfg.alphas = opt.pvalues;
    cfg.rounds = opt.rounds;
    cfg.experiments = opt.experiments;
    cfg.seed = opt.seed;
    if (!opt.custom_strategies.empty()) {
        cfg.strategies.clear();
        for (const auto& [i, s] : opt.custom_strategies) cfg.strategies.push_back(s);
    }
    const auto rows = gof_sweep(cfg, opt.jobs);
    auto& os = out.open("gof_sweep.csv");
    write_csv_preamble(os, hash, "history,alpha,strategy,positive_rate");
    for (const auto& r : rows) {
        os << r.history << ',' << format_double(r.alpha) << ',' << to_string(r.strategy) << ','
           << format_double(r.positive_rate) << '\n';
    }
}

/// Executes a resolved invocation; writes CSVs plus manifest.txt into opt.out.
/// On failure every file this run created is removed and the error propagates.
inline std::vector<std::string> run(const RunOptions& opt) {
    if (opt.jobs == 0) throw ConfigError("--jobs must be positive");
    const std::string hash = manifest_hash(opt);
    OutputSet out(opt.out);
    switch (opt.command) {
    case Command::scenarios: cmd_scenarios(opt, out, hash); break;
    case Command::fee_sweep: cmd_fee_sweep(opt, out, hash); break;
    case Command::gof_sweep: cmd_gof_sweep(opt, out, hash); break;
    case Command::compare: cmd_compare(opt, out, hash); break;
    }
    std::vector<std::string> written = out.names();
    auto& manifest = out.open("manifest.txt");
    manifest << manifest_body(opt);
    for (std::size_t i = 0; i < written.size(); ++i) manifest << "out." << i << '=' << written[i] << '\n';
    manifest << "# manifest " << hash << '\n';
    out.commit();
    written.push_back("manifest.txt");
    return written;
}

} // namespace fedor::cli
