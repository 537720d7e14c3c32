#include "fedor/core.hpp"
#include "fedor/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace fedor;

TEST(SlotWeights, RejectsInvalidWeights) {
    EXPECT_THROW(SlotWeights({}), ConfigError);
    EXPECT_THROW(SlotWeights({1.0, 2.0}), ConfigError);
    EXPECT_THROW(SlotWeights({1.0, 0.0}), ConfigError);
    EXPECT_THROW(SlotWeights({1.0, -1.0}), ConfigError);
    EXPECT_NO_THROW(SlotWeights({2.0, 2.0, 1.0}));
}

TEST(SlotWeights, Descending) {
    const auto w = SlotWeights::descending(3);
    EXPECT_EQ(w, SlotWeights({3.0, 2.0, 1.0}));
    EXPECT_DOUBLE_EQ(w.sum(), 6.0);
}

TEST(PlayerType, RejectsOutOfRange) {
    EXPECT_THROW(PlayerType(-0.01), ArgumentError);
    EXPECT_THROW(PlayerType(1.01), ArgumentError);
    EXPECT_THROW(PlayerType(std::nan("")), ArgumentError);
    EXPECT_DOUBLE_EQ(PlayerType(1.0).value(), 1.0);
}

TEST(MechanismConfig, RequiresFewerSlotsThanPlayers) {
    MechanismConfig cfg;
    cfg.players = 3;
    cfg.weights = SlotWeights({3.0, 2.0, 1.0});
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.players = 4;
    EXPECT_NO_THROW(cfg.validate());
    cfg.flat_fee = -1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(PerRoundUtility, Examples) {
    const SlotWeights w({3.0, 2.0, 1.0});
    EXPECT_DOUBLE_EQ(per_round_utility(PlayerType(0.5), SlotIndex{0}, w, 0.0), 1.5);
    EXPECT_DOUBLE_EQ(per_round_utility(PlayerType(0.5), std::nullopt, w, 0.0), 0.0);
    EXPECT_NEAR(per_round_utility(PlayerType(0.9), SlotIndex{2}, w, 0.2), 0.7, 1e-15);
    EXPECT_DOUBLE_EQ(per_round_utility(PlayerType(0.9), std::nullopt, w, 0.2), -0.2);
}

TEST(PerRoundUtility, SlotOutOfRangeIsConfigError) {
    const SlotWeights w({3.0, 2.0, 1.0});
    EXPECT_THROW(per_round_utility(PlayerType(0.5), SlotIndex{3}, w, 0.0), ConfigError);
}

TEST(AllocationOutcome, SlotOf) {
    AllocationOutcome out{{4, 1, 2}, {}, {}};
    EXPECT_EQ(out.slot_of(1), SlotIndex{1});
    EXPECT_FALSE(out.slot_of(0).has_value());
}

TEST(UtilityLedger, AdditivityMatchesLongDoubleReference) {
    // 10^6 rounds of awkward values: compensated total vs a long double reference.
    UtilityLedger ledger(2, 1);
    CounterRng rng(StreamKey{99, 0, 0, Purpose::test, 0});
    long double reference = 0.0L;
    for (int r = 0; r < 1'000'000; ++r) {
        const double u = per_round_utility(PlayerType(rng.uniform()), SlotIndex{0}, SlotWeights({3.0}), 0.1);
        ledger.credit_player(0, u);
        ledger.record_win(0, 0);
        ledger.close_round();
        reference += u;
    }
    EXPECT_NEAR(ledger.player_utility(0), static_cast<double>(reference), 1e-9);
    EXPECT_EQ(ledger.slot_total(0), ledger.rounds());
    EXPECT_EQ(ledger.slot_wins(1, 0), 0u);
}

TEST(UtilityLedger, FlatFeeSellerTotalIsExact) {
    UtilityLedger ledger(9, 3);
    for (int r = 0; r < 10000; ++r) {
        ledger.credit_seller(9 * 0.25);
        ledger.close_round();
    }
    EXPECT_EQ(ledger.seller_utility(), 10000 * 9 * 0.25);

    UtilityLedger awkward(9, 3);
    for (int r = 0; r < 10000; ++r) awkward.credit_seller(9 * 0.1);
    EXPECT_NEAR(awkward.seller_utility(), 10000 * 9 * 0.1, 1e-12 * 9000);
}

TEST(CounterRng, DeterministicAndKeyed) {
    CounterRng a(StreamKey{1, 2, 3, Purpose::true_type, 4});
    CounterRng b(StreamKey{1, 2, 3, Purpose::true_type, 4});
    CounterRng c(StreamKey{1, 2, 3, Purpose::true_type, 5});
    bool any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a(), y = b(), z = c();
        EXPECT_EQ(x, y);
        any_diff |= (x != z);
    }
    EXPECT_TRUE(any_diff);
}

TEST(CounterRng, UniformInUnitInterval) {
    CounterRng rng(7);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}
