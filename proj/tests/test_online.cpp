#include <random>

#include <gtest/gtest.h>

#include "ehmac/error.hpp"
#include "ehmac/online.hpp"
#include "support.hpp"

namespace ehmac {
namespace {

using test::scalar_channel;
using test::vec;

Scenario one_user(const std::vector<double>& instants, const std::vector<double>& energy, double capacity)
{
    Vector t(static_cast<Eigen::Index>(instants.size()));
    for (std::size_t i = 0; i < instants.size(); ++i) t[static_cast<Eigen::Index>(i)] = instants[i];
    Vector e(static_cast<Eigen::Index>(energy.size()));
    for (std::size_t i = 0; i < energy.size(); ++i) e[static_cast<Eigen::Index>(i)] = energy[i];
    return test::grid_scenario({scalar_channel(1.0)}, vec({1.0}), t, {e}, {capacity});
}

TEST(OnlinePower, SingleArrivalUsesFirstCandidate)
{
    // P+ = {0.2, 0.35, 0.4}: the first causality candidate is the minimum.
    EXPECT_DOUBLE_EQ(online_power(2.0, 10.0, 0.1, 5.0, 20.0), 0.1 * 2.0);
}

TEST(OnlinePower, LongHorizonApproachesRateTimesMean)
{
    // P+_n = 0.5 (3 + 2 / n) falls toward 1.5 until n_max = 501.
    EXPECT_DOUBLE_EQ(online_power(5.0, 1000.0, 0.5, 3.0, 1000.0), 0.5 * (5.0 + 3.0 * 500) / 501);
}

TEST(OnlinePower, NothingLeftOrNoTime)
{
    EXPECT_EQ(online_power(0.0, 10.0, 0.1, 5.0, 20.0), 0.0);
    EXPECT_EQ(online_power(3.0, 10.0, 0.1, 5.0, 0.0), 0.0);
}

TEST(OnlineSchedule, SteadyStateIsRateTimesMean)
{
    std::vector<double> t, e;
    for (int i = 0; i < 100; ++i) {
        t.push_back(2.0 * i);
        e.push_back(3.0);
    }
    t.push_back(200.0);
    const auto s = one_user(t, e, 100.0);
    const auto p = online_schedule(s, 0.5, vec({3.0}));
    for (int i = 20; i < 80; ++i) EXPECT_NEAR(p(i, 0), 1.5, 0.05 * 1.5);
}

TEST(OnlineSchedule, NeverOverdrawsTheBattery)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = test::random_scenario(rng, 2, 1, 1, 1 + trial % 15);
        for (bool adaptive : {false, true}) {
            const auto p = online_schedule(s, 0.3, vec({5.0, 5.0}), adaptive);
            EXPECT_TRUE(check_causal(s, p).feasible());
        }
    }
}

TEST(OnlineSchedule, StreamingMatchesBatchWithoutLookahead)
{
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 30; ++trial) {
        const auto s = test::random_scenario(rng, 2, 1, 1, 4 + trial % 8);
        const auto full = online_schedule(s, 0.2, vec({5.0, 5.0}));

        // Feeding the same stream by hand yields identical rows.
        OnlineScheduler stream(s.capacities(), s.horizon(), 0.2, vec({5.0, 5.0}));
        for (int i = 0; i < s.epochs(); ++i) {
            stream.observe(s.grid().start(i), vec({s.profile(0).arrivals()[i], s.profile(1).arrivals()[i]}));
            const Vector row = stream.advance(s.grid().end(i));
            EXPECT_EQ(row.transpose(), full.row(i));
        }

        // Dropping every arrival from instant m on leaves earlier rows unchanged.
        const int m = s.epochs() / 2;
        OnlineScheduler prefix(s.capacities(), s.horizon(), 0.2, vec({5.0, 5.0}));
        for (int i = 0; i < m; ++i) {
            prefix.observe(s.grid().start(i), vec({s.profile(0).arrivals()[i], s.profile(1).arrivals()[i]}));
            EXPECT_EQ(prefix.advance(s.grid().end(i)).transpose(), full.row(i));
        }
    }
}

TEST(OnlineScheduler, RejectsBadInput)
{
    EXPECT_THROW(OnlineScheduler(vec({10.0}), 5.0, 0.0, vec({1.0})), InvalidInput);
    EXPECT_THROW(OnlineScheduler(vec({10.0}), 5.0, 0.1, vec({-1.0})), InvalidInput);
    OnlineScheduler s(vec({10.0}), 5.0, 0.1, vec({1.0}));
    s.observe(1.0, vec({1.0}));
    EXPECT_THROW(s.observe(0.5, vec({1.0})), InvalidInput);
    EXPECT_THROW(s.observe(5.0, vec({1.0})), InvalidInput);
}

TEST(CausalitySatisfied, EmptiesBatteryByNextArrival)
{
    EXPECT_EQ(causality_satisfied(one_user({0.0, 1.0, 2.0}, {4.0, 2.0}, 10.0)).col(0), vec({4.0, 2.0}));
    EXPECT_EQ(causality_satisfied(one_user({0.0, 8.0}, {4.0}, 10.0)).col(0), vec({0.5}));
}

TEST(NonOverflow, IdlesThenBurstsWithLargeBattery)
{
    EXPECT_EQ(non_overflow(one_user({0.0, 1.0, 2.0}, {4.0, 2.0}, 100.0)).col(0), vec({0.0, 6.0}));
}

TEST(NonOverflow, FullBatteryForcesEarlyConsumption)
{
    EXPECT_EQ(non_overflow(one_user({0.0, 1.0, 2.0}, {10.0, 5.0}, 10.0)).col(0), vec({5.0, 10.0}));
}

TEST(Baselines, FeasibleAndConstantBetweenOwnArrivals)
{
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s = test::random_scenario(rng, 3, 1, 1, 1 + trial % 12);
        for (const auto& p : {causality_satisfied(s), non_overflow(s)}) {
            EXPECT_TRUE(check_feasible(s, p).feasible());
            for (int k = 0; k < 3; ++k)
                for (int i = 1; i < s.epochs(); ++i)
                    if (s.profile(k).arrivals()[i] == 0.0) EXPECT_EQ(p(i, k), p(i - 1, k));
        }
    }
}

}  // namespace
}  // namespace ehmac
