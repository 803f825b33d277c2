#include <random>

#include <gtest/gtest.h>

#include "ehmac/bca.hpp"
#include "ehmac/error.hpp"
#include "ehmac/online.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace ehmac {
namespace {

using test::scalar_channel;
using test::vec;

TEST(Initialize, SingleArrivalUsersAreConstant)
{
    const auto s = build_scenario({{{0.0, 4.0}}, {{0.0, 6.0}}}, {scalar_channel(1.0), scalar_channel(0.5)},
                                  vec({1.0, 1.0}), vec({10.0, 10.0}), 8.0);
    const auto p = initialize(s);
    EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(p(0, 1), 0.75);
}

TEST(Initialize, AlwaysFeasible)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto s = test::random_scenario(rng, 3, 2, 2, 1 + trial % 9);
        EXPECT_TRUE(check_feasible(s, initialize(s)).feasible());
    }
}

TEST(Solve, SingleUserConvergesInOneSweepToDecoupledSchedule)
{
    std::mt19937_64 rng(4);
    const auto s = test::random_scenario(rng, 1, 2, 2, 6);
    const auto r = solve(s);
    EXPECT_EQ(r.sweeps, 1);
    const auto p0 = initialize(s);
    for (int i = 0; i < s.epochs(); ++i) EXPECT_NEAR(r.powers(i, 0), p0(i, 0), 1e-6);
}

TEST(Solve, MatchesTwoEpochBruteForce)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> gain(0.3, 2.0), weight(0.5, 2.0);
    for (int trial = 0; trial < 8; ++trial) {
        const auto rp = test::random_profile(rng, 2, 10.0);
        const auto other = test::random_profile(rng, 2, 10.0);
        const auto s = test::grid_scenario({scalar_channel(gain(rng)), scalar_channel(gain(rng))},
                                           vec({weight(rng), weight(rng)}), rp.instants,
                                           {rp.arrivals, other.arrivals}, {10.0, 10.0});
        const auto r = solve(s, {.tolerance = 1e-8});
        const double oracle = test::brute_force_two_epoch(s);
        EXPECT_NEAR(r.throughput(), oracle, 1e-3 * oracle) << "trial " << trial;
        EXPECT_GE(r.throughput(), oracle - 1e-6 * oracle);
    }
}

TEST(Solve, AscentIsMonotoneFeasibleAndStationary)
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 6; ++trial) {
        const auto s = test::random_scenario(rng, 2, 2, 2, 3 + trial % 4, 10.0, vec({1.0, 1.0 + trial % 2}));
        const auto r = solve(s);
        for (std::size_t q = 1; q < r.trace.size(); ++q) EXPECT_GE(r.trace[q], r.trace[q - 1] - 1e-9 * r.trace[q - 1]);
        EXPECT_TRUE(check_feasible(s, r.powers).feasible());
        ASSERT_EQ(static_cast<int>(r.covariances.size()), s.epochs());
        const auto kkt = verify_kkt(s, r.powers);
        EXPECT_TRUE(kkt.passes(1e-2)) << kkt.worst_spread << " " << kkt.worst_idle << " " << kkt.worst_chain;
    }
}

TEST(Solve, TightToleranceSatisfiesKktClosely)
{
    std::mt19937_64 rng(10);
    const auto s = test::random_scenario(rng, 2, 2, 2, 4);
    const auto r = solve(s, {.tolerance = 1e-12});
    const auto kkt = verify_kkt(s, r.powers);
    EXPECT_TRUE(kkt.passes(1e-4)) << kkt.worst_spread << " " << kkt.worst_idle << " " << kkt.worst_chain;
}

TEST(Solve, OrderAndInitializationDoNotChangeTheOptimum)
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 4; ++trial) {
        const auto s = test::random_scenario(rng, 3, 2, 2, 4);
        const double eps = 1e-4;
        const double forward = solve(s, {.tolerance = eps}).throughput();
        const double reverse = solve(s, {.tolerance = eps, .reverse_order = true}).throughput();
        const double baseline = solve(s, {.tolerance = eps, .initial = causality_satisfied(s)}).throughput();
        EXPECT_NEAR(reverse, forward, 10 * eps * forward);
        EXPECT_NEAR(baseline, forward, 10 * eps * forward);
        EXPECT_GE(forward, throughput(s, initialize(s)) - 1e-9 * forward);
        EXPECT_GE(forward, throughput(s, non_overflow(s)) - 1e-9 * forward);
    }
}

TEST(Solve, SweepCapRaisesWithTrace)
{
    std::mt19937_64 rng(14);
    const auto s = test::random_scenario(rng, 2, 2, 2, 5);
    try {
        solve(s, {.tolerance = 1e-15, .max_sweeps = 1});
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.trace().size(), 2u);
    }
}

TEST(Solve, RejectsBadOptions)
{
    std::mt19937_64 rng(16);
    const auto s = test::random_scenario(rng, 2, 1, 1, 2);
    EXPECT_THROW(solve(s, {.tolerance = 0.0}), InvalidInput);
    EXPECT_THROW(solve(s, {.max_sweeps = 0}), InvalidInput);
    EXPECT_THROW(solve(s, {.initial = PowerSchedule::Zero(s.epochs(), 2)}), InvalidInput);
}

TEST(Solve, ZeroWeightUserIsStillScheduled)
{
    std::mt19937_64 rng(18);
    const auto s = test::random_scenario(rng, 2, 2, 2, 3, 10.0, vec({1.0, 0.0}));
    const auto r = solve(s);
    EXPECT_TRUE(check_feasible(s, r.powers).feasible());
}

TEST(VerifyKkt, FlagsPerturbedPower)
{
    std::mt19937_64 rng(20);
    const auto s = test::random_scenario(rng, 2, 2, 2, 4);
    auto p = solve(s, {.tolerance = 1e-10}).powers;
    int epoch = 0;
    while (p(epoch, 0) == 0.0) ++epoch;
    p(epoch, 0) *= 1.05;
    EXPECT_FALSE(verify_kkt(s, p).passes(1e-4));
}

TEST(VerifyKkt, DecoupledInitPassesPointToPointLevel)
{
    std::mt19937_64 rng(22);
    const auto s = test::random_scenario(rng, 2, 2, 2, 5);
    const auto p0 = initialize(s);
    EXPECT_TRUE(verify_kkt(s, p0, KktLevel::Decoupled).passes(1e-4));
    const auto coupled = verify_kkt(s, p0, KktLevel::Coupled);
    const auto r = solve(s, {.tolerance = 1e-10});
    const double w0 = throughput(s, p0);
    ASSERT_GT(r.throughput(), w0 * (1.0 + 1e-6));
    EXPECT_FALSE(coupled.passes(1e-4));
    EXPECT_TRUE(verify_kkt(s, r.powers).passes(1e-4));
}

}  // namespace
}  // namespace ehmac
