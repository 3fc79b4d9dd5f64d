#include "fixtures.hpp"
#include "oracle.hpp"

#include "dvfsopt/error.hpp"
#include "dvfsopt/rng.hpp"
#include "dvfsopt/task_model.hpp"
#include "dvfsopt/workload.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dvfsopt;

namespace {

auto hard(double c, double t) -> HardTaskSpec { return HardTaskSpec{1, 0.0, c, t, t, 0.0, 1}; }

auto control(double c, double d, std::optional<int> skip = 2) -> ControlTaskSpec
{
    return ControlTaskSpec{1, 0.0, c, d, d, skip, 0.0, 1};
}

auto stats(TaskClass cls, std::vector<double> overruns, std::optional<int> skip = std::nullopt,
           std::vector<LatenessConstraint> soft = {}) -> TaskStatistics
{
    return TaskStatistics{1, cls, std::move(overruns), skip, std::move(soft)};
}

auto passes(const TaskStatistics& s) -> bool
{
    const int id = s.task_id;
    return check_constraints(std::span(&s, 1), std::span(&id, 1)).all_passed();
}

auto pattern(Rng& rng, std::size_t n, double miss_p) -> std::vector<double>
{
    std::vector<double> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(rng.bernoulli(miss_p) ? 0.01 + rng.uniform01() : -rng.uniform01());
    return out;
}

} // namespace

TEST(Utilization, DirectRatio)
{
    EXPECT_EQ(utilization(hard(1.0, 4.0)), 0.25);
    EXPECT_EQ(utilization(hard(3.0, 3.0)), 1.0);
    EXPECT_EQ(utilization(control(0.5, 2.0)), 0.25);
}

TEST(Utilization, ReferenceTasksTaskZeroAtMaxMode)
{
    const auto rows = fixtures::reference_tasks();
    const auto spec = to_hard_spec(rows[0], 1.0, 2.4e9);
    EXPECT_NEAR(utilization(spec) / 2.824283420899007589e-5, 1.0, 1e-14);
}

TEST(Utilization, RejectsOrderViolations)
{
    EXPECT_THROW(utilization(HardTaskSpec{1, 0.0, 2.0, 4.0, 1.0, 0.0, 1}), InvalidArgument);
    EXPECT_THROW(utilization(HardTaskSpec{1, 0.0, 0.0, 4.0, 4.0, 0.0, 1}), InvalidArgument);
    EXPECT_THROW(utilization(ControlTaskSpec{1, 0.0, 1.0, 5.0, 4.0, 2, 0.0, 1}), InvalidArgument);
    EXPECT_THROW(utilization(control(1.0, 4.0, 1)), InvalidArgument);
}

TEST(AvgUtilization, BothForms)
{
    const SoftTaskSpec equal{1, 3.0, 3.0, 1.0, 0.0, 1};
    EXPECT_EQ(avg_utilization(equal), 1.0);
    EXPECT_EQ(avg_utilization(equal, SoftUtilForm::conventional), 1.0);
    const SoftTaskSpec s{1, 2.0, 4.0, 1.0, 0.0, 1};
    EXPECT_EQ(avg_utilization(s), 2.0);
    EXPECT_EQ(avg_utilization(s, SoftUtilForm::conventional), 0.5);
}

TEST(AvgUtilization, ReferenceTasksTaskFiveAsWritten)
{
    const auto rows = fixtures::reference_tasks();
    const auto spec = to_soft_spec(rows[5], 1.0, 2.4e9);
    EXPECT_NEAR(avg_utilization(spec) / 115616.59754687433084, 1.0, 1e-14);
}

TEST(LatenessFraction, Examples)
{
    const std::vector<double> on_time{-1.0, 0.0, -0.5};
    EXPECT_EQ(lateness_fraction(on_time, 0.0), 0.0);
    const std::vector<double> mixed{-1.0, 0.5, 2.0};
    EXPECT_DOUBLE_EQ(lateness_fraction(mixed, 1.0), 1.0 / 3.0);
    EXPECT_THROW(lateness_fraction(std::vector<double>{}, 0.0), EmptySample);
}

TEST(LatenessFraction, MatchesBruteForceCount)
{
    Rng rng(3);
    std::vector<double> v;
    for (int k = 0; k < 1000; ++k) v.push_back(4.0 * rng.uniform01() - 2.0);
    for (double x : {-2.5, -1.0, 0.0, 0.25, 1.9, 3.0}) {
        int late = 0;
        for (double o : v) late += o > x ? 1 : 0;
        EXPECT_EQ(lateness_fraction(v, x), late / 1000.0);
    }
}

TEST(LatenessFraction, NonIncreasingInX)
{
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v;
        for (int k = 0; k < 40; ++k) v.push_back(rng.normal());
        double prev = 1.0;
        for (double x = -3.0; x <= 3.0; x += 0.05) {
            const double a = lateness_fraction(v, x);
            EXPECT_LE(a, prev);
            prev = a;
        }
    }
}

TEST(CheckConstraints, ControlSkipTwoExamples)
{
    EXPECT_TRUE(passes(stats(TaskClass::control, {0.1, -0.1, 0.2, -0.1}, 2)));
    EXPECT_FALSE(passes(stats(TaskClass::control, {0.1, 0.2}, 2)));
}

TEST(CheckConstraints, SoftFiveOfHundred)
{
    std::vector<double> v(100, -0.1);
    for (int k = 0; k < 5; ++k) v[static_cast<std::size_t>(k * 20)] = 0.5;
    EXPECT_TRUE(passes(stats(TaskClass::soft, v, std::nullopt, {{0.0, 0.1}})));
    EXPECT_FALSE(passes(stats(TaskClass::soft, v, std::nullopt, {{0.0, 0.04}})));
    EXPECT_TRUE(passes(stats(TaskClass::soft, v, std::nullopt, {{0.0, 0.1}, {0.5, 0.0}})));
}

TEST(CheckConstraints, HardToleratesNothing)
{
    EXPECT_TRUE(passes(stats(TaskClass::hard, {0.0, -3.0})));
    EXPECT_FALSE(passes(stats(TaskClass::hard, {0.0, 1e-12})));
}

TEST(CheckConstraints, MissingStatisticsRaise)
{
    const auto s = stats(TaskClass::hard, {0.0});
    const std::vector<int> declared{1, 2};
    EXPECT_THROW(check_constraints(std::span(&s, 1), declared), IncompleteEvaluation);
}

TEST(CheckConstraints, InfiniteSkipEqualsHard)
{
    EXPECT_EQ(control_constraint(std::nullopt), hard_constraint());
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const auto v = pattern(rng, 12, 0.1);
        EXPECT_EQ(passes(stats(TaskClass::control, v, std::nullopt)), passes(stats(TaskClass::hard, v)));
    }
}

TEST(CheckConstraintsProperty, ControlPatternsAgainstBruteForce)
{
    Rng rng(21);
    for (int trial = 0; trial < 2000; ++trial) {
        const int skip = static_cast<int>(rng.between(2, 4));
        const auto v = pattern(rng, static_cast<std::size_t>(rng.between(1, 16)), 0.3);
        std::vector<std::size_t> miss_at;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (v[k] > 0.0) miss_at.push_back(k);
        }
        bool spaced = true;
        for (std::size_t k = 1; k < miss_at.size(); ++k) {
            if (miss_at[k] - miss_at[k - 1] < static_cast<std::size_t>(skip)) spaced = false;
        }
        const bool fraction_ok = static_cast<double>(miss_at.size()) <=
                                 (skip - 1.0) / skip * static_cast<double>(v.size());
        EXPECT_EQ(passes(stats(TaskClass::control, v, skip)), spaced && fraction_ok);
    }
}

TEST(CheckConstraintsProperty, RemovingAMissNeverBreaksAPass)
{
    Rng rng(22);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto cls = static_cast<TaskClass>(rng.below(3));
        const std::optional<int> skip = cls == TaskClass::control ? std::optional<int>(2) : std::nullopt;
        const std::vector<LatenessConstraint> soft{{0.0, 0.2}, {0.5, 0.1}};
        auto v = pattern(rng, 20, 0.2);
        const bool before = passes(stats(cls, v, skip, soft));
        for (auto& o : v) {
            if (o > 0.0 && rng.bernoulli(0.5)) o = -0.01;
        }
        const bool after = passes(stats(cls, v, skip, soft));
        EXPECT_TRUE(!before || after);
    }
}

TEST(CheckConstraintsProperty, SoftLooseningIsMonotone)
{
    Rng rng(23);
    for (int trial = 0; trial < 500; ++trial) {
        const auto v = pattern(rng, 30, 0.25);
        const double x = rng.uniform01();
        const double beta = 0.5 * rng.uniform01();
        const bool base = passes(stats(TaskClass::soft, v, std::nullopt, {{x, beta}}));
        if (base) {
            EXPECT_TRUE(passes(stats(TaskClass::soft, v, std::nullopt, {{x + 0.1, beta}})));
            EXPECT_TRUE(passes(stats(TaskClass::soft, v, std::nullopt, {{x, std::min(1.0, beta + 0.1)}})));
        }
        int late = 0;
        for (double o : v) late += o > x ? 1 : 0;
        EXPECT_EQ(base, late <= beta * 30.0 + 1e-12);
    }
}

TEST(SkipDistance, HitsBetweenMisses)
{
    EXPECT_TRUE(skip_distance_ok({true, false, false, true}, 3));
    EXPECT_FALSE(skip_distance_ok({true, false, true}, 3));
    EXPECT_TRUE(skip_distance_ok({}, 2));
}

TEST(ChooseControlPeriods, SingleTaskTight)
{
    const std::vector<ControlTaskSpec> one{control(1.0, 10.0)};
    const auto t = choose_control_periods(one, 0.5);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_NEAR(t[0], 2.0, 2e-9);
    EXPECT_LE(1.0 / t[0], 0.5);
}

TEST(ChooseControlPeriods, SingleTaskInfeasible)
{
    const std::vector<ControlTaskSpec> one{control(1.0, 10.0)};
    EXPECT_THROW(choose_control_periods(one, 0.05), InfeasibleError);
    EXPECT_THROW(choose_control_periods(one, 1.0), DomainError);
}

TEST(ChooseControlPeriods, ClampAtWcetWhenSlackIsAmple)
{
    // Task 1 saturates at its WCET; only task 0 needs scaling.
    const std::vector<ControlTaskSpec> two{control(1.0, 10.0), control(0.001, 10.0)};
    const auto t = choose_control_periods(two, 0.5);
    EXPECT_LE(1.0 / t[0] + 0.001 / t[1], 0.5);
    EXPECT_GE(t[1], 0.001);
}

TEST(ChooseControlPeriods, RandomInstancesMatchGridSearch)
{
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<ControlTaskSpec> tasks;
        std::vector<oracle::PeriodTask> grid_tasks;
        for (int k = 0; k < 3; ++k) {
            const double d = 0.001 * static_cast<double>(rng.between(20, 90));
            const double c = d * (0.02 + 0.18 * rng.uniform01());
            tasks.push_back(control(c, d));
            grid_tasks.push_back({c, d});
        }
        const auto t = choose_control_periods(tasks, 0.7);
        double load = 0.0;
        double m = 0.0;
        double d_min = 1.0;
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_GE(t[k], tasks[k].wcet_s);
            EXPECT_LE(t[k], tasks[k].deadline_s);
            load += tasks[k].wcet_s / t[k];
            m = std::max(m, t[k] / tasks[k].deadline_s);
            d_min = std::min(d_min, tasks[k].deadline_s);
        }
        EXPECT_LE(load, 0.7);
        const auto best = oracle::grid_periods3(grid_tasks, 0.7);
        ASSERT_TRUE(best.has_value());
        EXPECT_GE(best->max_normalized, m * (1.0 - 1e-9));
        EXPECT_LE(best->max_normalized, m + 1e-3 / d_min);
    }
}

TEST(TaskViews, ControlUsesDeadlineAsPeriod)
{
    const auto rows = fixtures::reference_tasks();
    const auto c = to_control_spec(rows[1], 1.0, 2.4e9, 2);
    EXPECT_EQ(c.period_s, c.deadline_s);
    EXPECT_EQ(c.deadline_s, 0.015);
    EXPECT_DOUBLE_EQ(c.wcet_s, 5594832.0 / 2.4e9);
    EXPECT_EQ(c.n_jobs, 115);
}
