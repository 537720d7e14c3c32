#include "fedor/cli.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace fedor;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("fedor_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) out.push_back(line);
    return out;
}

cli::RunOptions quick(cli::Command c, const fs::path& out) {
    cli::RunOptions opt;
    opt.command = c;
    opt.rounds = 50;
    opt.experiments = 2;
    opt.histories = {20};
    opt.out = out;
    return opt;
}

int run_binary(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(FEDOR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Catalog, Populations) {
    const auto a = cli::scenario_catalog("A");
    EXPECT_EQ(a.players(), 9u);
    EXPECT_EQ(a.mechanism.weights, SlotWeights({3.0, 2.0, 1.0}));
    EXPECT_EQ(a.mechanism.gof, (GoFConfig{1000, 0.1}));
    EXPECT_EQ(a.rounds, 10000u);
    EXPECT_EQ(a.experiments, 100u);
    for (const auto& s : a.strategies) EXPECT_TRUE(s.is_honest());

    const auto i = cli::scenario_catalog("I");
    for (std::size_t p = 0; p < 6; ++p) EXPECT_TRUE(i.strategies[p].is_honest());
    for (std::size_t p = 6; p < 9; ++p) EXPECT_EQ(i.strategies[p], StrategySpec::normal(0.5, 0.15));

    const auto g = cli::scenario_catalog("G");
    EXPECT_EQ(g.strategies[8], StrategySpec::beta_uncorrelated(0.9));

    const auto j = cli::scenario_catalog("J");
    EXPECT_EQ(std::count_if(j.strategies.begin(), j.strategies.end(), [](auto& s) { return s.is_honest(); }), 5);

    for (const auto& label : cli::catalog_labels()) EXPECT_NO_THROW(cli::scenario_catalog(label).validate());
    EXPECT_THROW(cli::scenario_catalog("K"), ConfigError);
}

TEST(Catalog, TradeoffGrid) {
    const auto grid = cli::tradeoff_grid();
    EXPECT_EQ(grid.size(), 13u);
    EXPECT_EQ(grid.front(), (std::pair<std::size_t, std::size_t>{9, 1}));
    EXPECT_EQ(grid.back(), (std::pair<std::size_t, std::size_t>{8, 3}));
    const auto pop = cli::honest_population(6, 4);
    EXPECT_EQ(pop.mechanism.weights, SlotWeights({4.0, 3.0, 2.0, 1.0}));
    EXPECT_EQ(pop.gate, GateKind::perfect);
}

TEST(Settings, ParseConfigText) {
    cli::RunOptions opt;
    std::istringstream in("# comment\ncommand=fee-sweep\nfee=0,0.1,0.2\nplayers=6\nweights=3,1\n"
                          "seed=42\nperfect_gof=true\nplayer.1.strategy=beta:0.7\nplayer.0.strategy=honest\n"
                          "out.0=ignored.csv\n");
    cli::load_settings(opt, in);
    EXPECT_EQ(opt.command, cli::Command::fee_sweep);
    EXPECT_EQ(opt.fees, (std::vector<double>{0.0, 0.1, 0.2}));
    EXPECT_EQ(opt.players, 6u);
    EXPECT_EQ(opt.weights, (std::vector<double>{3.0, 1.0}));
    EXPECT_EQ(opt.seed, 42u);
    EXPECT_TRUE(opt.perfect_gof);
    EXPECT_EQ(opt.custom_strategies.at(1), StrategySpec::beta_uncorrelated(0.7));
}

TEST(Settings, Errors) {
    cli::RunOptions opt;
    EXPECT_THROW(cli::apply_setting(opt, "colour", "red"), ConfigError);
    EXPECT_THROW(cli::apply_setting(opt, "rounds", "ten"), ConfigError);
    EXPECT_THROW(cli::apply_setting(opt, "rounds", "-5"), ConfigError);
    EXPECT_THROW(cli::apply_setting(opt, "mechanism", "dutch"), ConfigError);
    EXPECT_THROW(cli::apply_setting(opt, "perfect_gof", "yes"), ConfigError);
    EXPECT_THROW(cli::apply_setting(opt, "command", "plot"), ConfigError);
    std::istringstream in("rounds 10\n");
    EXPECT_THROW(cli::load_settings(opt, in), ConfigError);
}

TEST(Manifest, BodyRoundTripsAndHashIsStable) {
    cli::RunOptions opt;
    opt.labels = {"B", "J"};
    opt.mechanisms = {MechanismKind::fedor, MechanismKind::gsp};
    opt.fees = {0.1};
    opt.seed = 7;
    cli::RunOptions back;
    std::istringstream in(cli::manifest_body(opt));
    cli::load_settings(back, in);
    EXPECT_EQ(cli::manifest_body(back), cli::manifest_body(opt));
    EXPECT_EQ(cli::manifest_hash(back), cli::manifest_hash(opt));
    EXPECT_EQ(cli::manifest_hash(opt).size(), 16u);
    back.seed = 8;
    EXPECT_NE(cli::manifest_hash(back), cli::manifest_hash(opt));
    // Output location and thread count do not affect results.
    back = opt;
    back.out = "/elsewhere";
    back.jobs = 4;
    EXPECT_EQ(cli::manifest_hash(back), cli::manifest_hash(opt));
}

TEST(Resolve, OverridesAndMismatches) {
    cli::RunOptions opt;
    opt.fees = {0.2};
    opt.seed = 3;
    opt.perfect_gof = true;
    const auto cfg = cli::resolve_scenario(opt, "C", MechanismKind::fedor);
    EXPECT_EQ(cfg.mechanism.flat_fee, 0.2);
    EXPECT_EQ(cfg.mechanism.master_seed, 3u);
    EXPECT_EQ(cfg.gate, GateKind::perfect);

    opt.players = 7;
    EXPECT_THROW(cli::resolve_scenario(opt, "C", MechanismKind::fedor), ConfigError);
    opt.players.reset();
    opt.slots = 2;
    opt.weights = std::vector<double>{3.0, 2.0, 1.0};
    EXPECT_THROW(cli::resolve_scenario(opt, "A", MechanismKind::vcg), ConfigError);
    opt.weights.reset();
    EXPECT_EQ(cli::resolve_scenario(opt, "A", MechanismKind::vcg).mechanism.weights, SlotWeights({2.0, 1.0}));

    cli::RunOptions custom;
    custom.custom_strategies = {{0, StrategySpec::honest()}, {2, StrategySpec::honest()}};
    EXPECT_THROW(cli::resolve_scenario(custom, "custom", MechanismKind::fedor), ConfigError);
    custom.custom_strategies = {{0, StrategySpec::honest()}, {1, StrategySpec::honest()},
                                {2, StrategySpec::random_uniform()}, {3, StrategySpec::honest()}};
    EXPECT_EQ(cli::resolve_scenario(custom, "custom", MechanismKind::fedor).players(), 4u);
}

TEST(Run, ScenariosCsvShapeAndByteIdenticalRerun) {
    const auto dir = fresh_dir("scenarios");
    auto opt = quick(cli::Command::scenarios, dir / "first");
    opt.labels = {"A", "D"};
    const auto written = cli::run(opt);
    EXPECT_EQ(written, (std::vector<std::string>{"scenarios.csv", "social.csv", "manifest.txt"}));

    const auto csv = lines(slurp(dir / "first" / "scenarios.csv"));
    ASSERT_EQ(csv.size(), 2u + 2 * 3 * 2 * 9); // preamble + labels x mechanisms x experiments x players
    EXPECT_EQ(csv[0], "# manifest " + cli::manifest_hash(opt));
    EXPECT_EQ(csv[1], "scenario,mechanism,experiment,player,strategy,cumulative_utility,per_round_mean,"
                      "slot1_wins,slot2_wins,slot3_wins,gof_rejections");
    EXPECT_EQ(csv[2].substr(0, 16), "A,fedor,0,1,hone");
    EXPECT_EQ(lines(slurp(dir / "first" / "social.csv")).size(), 2u + 2 * 3 * 2);

    opt.out = dir / "second";
    opt.jobs = 3;
    cli::run(opt);
    for (const auto* f : {"scenarios.csv", "social.csv"}) {
        EXPECT_EQ(slurp(dir / "first" / f), slurp(dir / "second" / f)) << f;
    }

    // Replaying the manifest reproduces the outputs.
    cli::RunOptions replay;
    cli::load_settings_file(replay, dir / "first" / "manifest.txt");
    replay.out = dir / "third";
    cli::run(replay);
    for (const auto* f : {"scenarios.csv", "social.csv", "manifest.txt"}) {
        EXPECT_EQ(slurp(dir / "first" / f), slurp(dir / "third" / f)) << f;
    }
}

TEST(Run, GofSweepRowCount) {
    const auto dir = fresh_dir("gof");
    auto opt = quick(cli::Command::gof_sweep, dir);
    opt.histories = {100, 500, 1000, 5000};
    opt.pvalues = {0.05, 0.1, 0.2};
    opt.rounds = 20;
    opt.experiments = 1;
    cli::run(opt);
    const auto csv = lines(slurp(dir / "gof_sweep.csv"));
    ASSERT_EQ(csv.size(), 2u + 4 * 3 * 4);
    EXPECT_EQ(csv[1], "history,alpha,strategy,positive_rate");
    EXPECT_EQ(csv[2].substr(0, 4), "100,");
    EXPECT_NE(csv[2].find(",honest,"), std::string::npos);
}

TEST(Run, FeeSweepSlopeIsMinusOneOverN) {
    const auto dir = fresh_dir("fee");
    auto opt = quick(cli::Command::fee_sweep, dir);
    opt.players = 9;
    opt.slots = 3;
    opt.fees = {0.0, 0.3};
    opt.rounds = 500;
    cli::run(opt);
    const auto csv = lines(slurp(dir / "fee_sweep.csv"));
    ASSERT_EQ(csv.size(), 4u);
    auto field = [](const std::string& line, int idx) {
        return std::stod(cli::split_list(line)[static_cast<std::size_t>(idx)]);
    };
    const double slope = (field(csv[3], 4) - field(csv[2], 4)) / (field(csv[3], 3) - field(csv[2], 3));
    EXPECT_NEAR(slope, -1.0 / 9.0, 1e-9);
}

TEST(Run, CompareCoversGridAndMechanisms) {
    const auto dir = fresh_dir("compare");
    auto opt = quick(cli::Command::compare, dir);
    opt.rounds = 20;
    opt.experiments = 1;
    cli::run(opt);
    const auto csv = lines(slurp(dir / "compare.csv"));
    EXPECT_EQ(csv.size(), 2u + 13 * 3);
    EXPECT_EQ(csv[1], "n,k,mechanism,seller_mean,player_mean");
}

TEST(Run, InvalidConfigLeavesNoFiles) {
    const auto dir = fresh_dir("invalid");
    auto opt = quick(cli::Command::scenarios, dir);
    opt.labels = {"A", "Z"};
    EXPECT_THROW(cli::run(opt), ConfigError);
    EXPECT_TRUE(fs::is_empty(dir));

    opt.labels = {"A"};
    opt.jobs = 0;
    EXPECT_THROW(cli::run(opt), ConfigError);
    EXPECT_TRUE(fs::is_empty(dir));
}

TEST(Binary, ExitCodesAndOutputs) {
    const auto dir = fresh_dir("binary");
    const std::string out = " --out " + (dir / "ok").string();
    EXPECT_EQ(run_binary("scenarios --label A --mechanism vcg --rounds 20 --experiments 1" + out), 0);
    EXPECT_TRUE(fs::exists(dir / "ok" / "scenarios.csv"));
    EXPECT_TRUE(fs::exists(dir / "ok" / "manifest.txt"));
    EXPECT_EQ(run_binary("replay " + (dir / "ok" / "manifest.txt").string() + " --out " + (dir / "replay").string()), 0);
    EXPECT_EQ(slurp(dir / "ok" / "scenarios.csv"), slurp(dir / "replay" / "scenarios.csv"));

    EXPECT_EQ(run_binary("scenarios --label Q --out " + (dir / "bad").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "bad" / "scenarios.csv"));
    EXPECT_EQ(run_binary("scenarios --weights 1,2 --out " + (dir / "bad").string()), 2);
    EXPECT_NE(run_binary("frobnicate"), 0);
}

TEST(Binary, EnvironmentSeedOverridesFlag) {
    const auto dir = fresh_dir("env");
    const std::string common = "scenarios --label E --mechanism fedor --rounds 30 --experiments 1 --history 20";
    ASSERT_EQ(run_binary(common + " --seed 5 --out " + (dir / "a").string()), 0);
    ASSERT_EQ(run_binary(common + " --seed 9 --out " + (dir / "b").string(), "FEDOR_SEED=5"), 0);
    EXPECT_EQ(slurp(dir / "a" / "scenarios.csv"), slurp(dir / "b" / "scenarios.csv"));
}
