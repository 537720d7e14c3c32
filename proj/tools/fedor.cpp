// fedor: experiment front-end. Emits plot-ready CSVs for the scenario study,
// the flat-fee tradeoff, the GoF history sweep and the mechanism comparison.

#include "fedor/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct Flags {
    std::string config;
    std::string label, mechanism, players, slots, weights, fee, rounds, experiments, history, pvalue, seed;
    bool perfect_gof = false;
    std::size_t jobs = 1;
    std::string out = ".";
};

void add_common_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "key=value configuration file (flags override it)");
    cmd->add_option("--label", f.label, "scenario label(s) A..J, comma separated");
    cmd->add_option("--mechanism", f.mechanism, "fedor|vcg|gsp, comma separated");
    cmd->add_option("--players", f.players, "number of players n");
    cmd->add_option("--slots", f.slots, "number of slots k");
    cmd->add_option("--weights", f.weights, "slot weights, comma separated, non-increasing");
    cmd->add_option("--fee", f.fee, "flat fee(s) per player per round");
    cmd->add_option("--rounds", f.rounds, "scored rounds per experiment");
    cmd->add_option("--experiments", f.experiments, "independent experiments");
    cmd->add_option("--history", f.history, "GoF history length(s)");
    cmd->add_option("--pvalue", f.pvalue, "GoF p-value threshold(s)");
    cmd->add_option("--seed", f.seed, "master seed (FEDOR_SEED overrides)");
    cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_flag("--perfect-gof", f.perfect_gof, "use the oracle GoF gate instead of the KS test");
}

fedor::cli::RunOptions resolve(fedor::cli::Command command, const Flags& f) {
    using fedor::cli::apply_setting;
    fedor::cli::RunOptions opt;
    opt.command = command;
    if (!f.config.empty()) fedor::cli::load_settings_file(opt, f.config);
    opt.command = command;
    const std::pair<const char*, const std::string*> settings[] = {
        {"label", &f.label},     {"mechanism", &f.mechanism},     {"players", &f.players},
        {"slots", &f.slots},     {"weights", &f.weights},         {"fee", &f.fee},
        {"rounds", &f.rounds},   {"experiments", &f.experiments}, {"history", &f.history},
        {"pvalue", &f.pvalue},   {"seed", &f.seed},
    };
    for (const auto& [key, value] : settings) {
        if (!value->empty()) apply_setting(opt, key, *value);
    }
    if (f.perfect_gof) opt.perfect_gof = true;
    if (const char* env = std::getenv("FEDOR_SEED"); env && *env) apply_setting(opt, "seed", env);
    opt.jobs = f.jobs;
    opt.out = f.out;
    return opt;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FEDoR repeated-allocation experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(fedor::cli::tool_version));

    Flags flags;
    struct Entry {
        CLI::App* app;
        fedor::cli::Command command;
    };
    std::vector<Entry> commands{
        {app.add_subcommand("scenarios", "per-player and social utilities for scenarios A..J"),
         fedor::cli::Command::scenarios},
        {app.add_subcommand("fee-sweep", "seller/player utility pairs across flat fees"),
         fedor::cli::Command::fee_sweep},
        {app.add_subcommand("gof-sweep", "KS positive rates by history length and p-value"),
         fedor::cli::Command::gof_sweep},
        {app.add_subcommand("compare", "VCG/GSP/FEDoR utilities for honest populations"),
         fedor::cli::Command::compare},
    };
    for (auto& e : commands) add_common_flags(e.app, flags);

    std::string manifest;
    auto* replay = app.add_subcommand("replay", "re-run a manifest.txt written by an earlier run");
    replay->add_option("manifest", manifest, "manifest file")->required();
    replay->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
    replay->add_option("--out", flags.out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        fedor::cli::RunOptions opt;
        if (replay->parsed()) {
            fedor::cli::load_settings_file(opt, manifest);
            opt.jobs = flags.jobs;
            opt.out = flags.out;
        } else {
            for (const auto& e : commands) {
                if (e.app->parsed()) opt = resolve(e.command, flags);
            }
        }
        for (const auto& name : fedor::cli::run(opt)) std::cout << (opt.out / name).string() << '\n';
    } catch (const fedor::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
