#include <random>

#include <gtest/gtest.h>

#include "ehmac/error.hpp"
#include "ehmac/model.hpp"
#include "support.hpp"

namespace ehmac {
namespace {

using test::scalar_channel;
using test::vec;

Scenario two_user_example()
{
    std::vector<ArrivalList> arrivals{{{0.0, 4.0}}, {{0.0, 2.0}, {8.0, 3.0}}};
    return build_scenario(arrivals, {scalar_channel(1.0), scalar_channel(1.0)}, vec({1.0, 1.0}),
                          vec({10.0, 10.0}), 20.0);
}

TEST(BuildScenario, MergesGridAndPadsZeros)
{
    const auto s = two_user_example();
    EXPECT_EQ(s.epochs(), 2);
    EXPECT_EQ(s.grid().instants(), vec({0.0, 8.0, 20.0}));
    EXPECT_EQ(s.profile(0).arrivals(), vec({4.0, 0.0}));
    EXPECT_EQ(s.profile(1).arrivals(), vec({2.0, 3.0}));
    EXPECT_EQ(s.grid().lengths(), vec({8.0, 12.0}));
}

TEST(BuildScenario, ClipsArrivalsToCapacity)
{
    const auto s = build_scenario({{{0.0, 15.0}}}, {scalar_channel(1.0)}, vec({1.0}), vec({10.0}), 5.0);
    EXPECT_EQ(s.profile(0).arrivals()[0], 10.0);
}

TEST(BuildScenario, SingleArrivalIsOneEpoch)
{
    const auto s = build_scenario({{{0.0, 3.0}}}, {scalar_channel(1.0)}, vec({1.0}), vec({10.0}), 7.5);
    EXPECT_EQ(s.epochs(), 1);
    EXPECT_EQ(s.grid().length(0), 7.5);
}

TEST(BuildScenario, RejectsMalformedInput)
{
    const std::vector<ComplexMatrix> one{scalar_channel(1.0)};
    EXPECT_THROW(build_scenario({{{0.0, 1.0}, {2.0, 1.0}, {2.0, 3.0}}}, one, vec({1.0}), vec({10.0}), 5.0),
                 InvalidInput);
    EXPECT_THROW(build_scenario({{{0.0, 1.0}}}, one, vec({1.0}), vec({10.0}), 0.0), InvalidInput);
    EXPECT_THROW(build_scenario({{{0.0, 1.0}}}, one, vec({1.0}), vec({10.0}), -1.0), InvalidInput);
    EXPECT_THROW(build_scenario({{{0.0, 1.0}, {5.0, 1.0}}}, one, vec({1.0}), vec({10.0}), 5.0),
                 InvalidInput);
    EXPECT_THROW(build_scenario({{{1.0, 1.0}}}, one, vec({1.0}), vec({10.0}), 5.0), InvalidInput);
    EXPECT_THROW(build_scenario({{{0.0, 1.0}}}, one, vec({1.0}), vec({0.0}), 5.0), InvalidInput);
    EXPECT_THROW(build_scenario({{{0.0, 1.0}}}, one, vec({0.0}), vec({10.0}), 5.0), InvalidInput);

    ComplexMatrix wide(1, 2);
    wide << 1.0, 1.0;
    EXPECT_THROW(build_scenario({{{0.0, 1.0}}, {{0.0, 1.0}}}, {scalar_channel(1.0), wide},
                                vec({1.0, 1.0}), vec({10.0, 10.0}), 5.0),
                 InvalidInput);
}

TEST(BuildScenario, ZeroInitialEnergyAllowed)
{
    const auto s = build_scenario({{{0.0, 0.0}, {3.0, 2.0}}}, {scalar_channel(1.0)}, vec({1.0}),
                                  vec({10.0}), 5.0);
    EXPECT_EQ(s.profile(0).arrivals(), vec({0.0, 2.0}));
}

TEST(EnergyProfile, CumulativeBounds)
{
    const EnergyProfile p(vec({4.0, 8.0, 6.0}), 10.0);
    EXPECT_EQ(p.arrived(), vec({4.0, 12.0, 18.0}));
    // (4 + 8 - 10)^+, (4 + 8 + 6 - 10)^+, then the terminal total.
    EXPECT_EQ(p.must_consume(), vec({2.0, 8.0, 18.0}));
}

TEST(EnergyProfile, MustConsumeNeverExceedsArrived)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> e(0.0, 12.0);
    std::uniform_real_distribution<double> cap(0.5, 15.0);
    for (int trial = 0; trial < 500; ++trial) {
        Vector a(1 + trial % 9);
        for (auto& x : a) x = e(rng) * (trial % 3 == 0 ? 0.0 : 1.0);
        a[0] = e(rng);
        const EnergyProfile p(a, cap(rng));
        for (int j = 0; j < p.epochs(); ++j) {
            EXPECT_LE(p.must_consume()[j], p.arrived()[j]);
            if (j > 0) EXPECT_GE(p.arrived()[j], p.arrived()[j - 1]);
        }
        EXPECT_EQ(p.must_consume()[p.epochs() - 1], p.total());
    }
}

TEST(BuildScenario, RebuildIsIdempotent)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> t(0.0, 30.0);
    std::uniform_real_distribution<double> e(0.01, 14.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ArrivalList> lists(3);
        for (auto& l : lists) {
            l.push_back({0.0, e(rng)});
            for (int j = 0; j < trial % 5; ++j) l.push_back({t(rng), e(rng)});
        }
        std::vector<ComplexMatrix> ch{scalar_channel(1.0), scalar_channel(0.5), scalar_channel(2.0)};
        const auto s1 = build_scenario(lists, ch, vec({1.0, 1.0, 1.0}), vec({10.0, 10.0, 10.0}), 30.0);
        const auto s2 = build_scenario(arrival_lists(s1), ch, vec({1.0, 1.0, 1.0}),
                                       vec({10.0, 10.0, 10.0}), 30.0);
        EXPECT_EQ(s1.grid(), s2.grid());
        for (int k = 0; k < 3; ++k) EXPECT_EQ(s1.profile(k), s2.profile(k));
    }
}

TEST(CheckFeasible, ZeroScheduleViolatesOnlyExhaustion)
{
    const auto s = test::grid_scenario({scalar_channel(1.0)}, vec({1.0}), vec({0.0, 1.0, 2.0, 3.0}),
                                       {vec({2.0, 3.0, 1.0})}, {100.0});
    const auto report = check_feasible(s, PowerSchedule::Zero(3, 1));
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].kind, ConstraintKind::Exhaustion);
    EXPECT_EQ(report.violations[0].epoch, 2);
    EXPECT_DOUBLE_EQ(report.violations[0].slack, -6.0);
}

TEST(CheckFeasible, OverdrawIsCausalityViolationAtFirstArrival)
{
    const auto s = test::grid_scenario({scalar_channel(1.0)}, vec({1.0}), vec({0.0, 2.0, 3.0}),
                                       {vec({4.0, 2.0})}, {10.0});
    PowerSchedule p(2, 1);
    p << 4.0 / 2.0 + 1.0, 0.0;
    const auto report = check_feasible(s, p);
    ASSERT_FALSE(report.feasible());
    EXPECT_EQ(report.violations[0].kind, ConstraintKind::Causality);
    EXPECT_EQ(report.violations[0].epoch, 0);
    EXPECT_DOUBLE_EQ(report.violations[0].slack, -2.0);
}

TEST(CheckFeasible, FeasibleScheduleIsSandwiched)
{
    const auto s = test::grid_scenario({scalar_channel(1.0)}, vec({1.0}), vec({0.0, 1.0, 2.0}),
                                       {vec({10.0, 10.0})}, {10.0});
    PowerSchedule p(2, 1);
    p << 10.0, 10.0;
    EXPECT_TRUE(check_feasible(s, p).feasible());
    p << 9.0, 11.0;
    const auto report = check_feasible(s, p);
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].kind, ConstraintKind::NonOverflow);
}

TEST(CheckFeasible, ShapeMismatchThrows)
{
    const auto s = two_user_example();
    EXPECT_THROW(check_feasible(s, PowerSchedule::Zero(3, 2)), InvalidInput);
}

TEST(CheckCausal, OverflowIsLostNotForbidden)
{
    const auto s = test::grid_scenario({scalar_channel(1.0)}, vec({1.0}), vec({0.0, 1.0, 2.0}),
                                       {vec({10.0, 10.0})}, {10.0});
    PowerSchedule p(2, 1);
    p << 0.0, 10.0;
    EXPECT_TRUE(check_causal(s, p).feasible());
    EXPECT_FALSE(check_feasible(s, p).feasible());
    p << 0.0, 10.5;
    EXPECT_FALSE(check_causal(s, p).feasible());
}

}  // namespace
}  // namespace ehmac
