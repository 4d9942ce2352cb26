#include <gtest/gtest.h>

#include <cmath>

#include "ehcrn/baselines.hpp"
#include "ehcrn/stats.hpp"

using namespace ehcrn;

TEST(RandomPolicy, UniformFrequencies) {
    RandomPolicy p(11, RandomStream(1));
    EnvObservation obs;
    const int n = 110'000;
    std::vector<int> counts(11, 0);
    for (int i = 0; i < n; ++i) ++counts[p.random_action(obs)];
    const double q = 1.0 / 11.0;
    const double sigma = std::sqrt(n * q * (1 - q));
    for (int c : counts) EXPECT_LT(std::abs(c - n * q), 3 * sigma);
}

TEST(RandomPolicy, IgnoresObservation) {
    RandomPolicy a(11, RandomStream(5)), b(11, RandomStream(5));
    EnvObservation x, y;
    y.nu = 1;
    y.battery = 0.4;
    y.gains.g_s = 3.0;
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.random_action(x), b.random_action(y));
}

TEST(RandomPolicy, SingleActionAndSameSeed) {
    RandomPolicy p(1, RandomStream(2));
    for (int i = 0; i < 100; ++i) EXPECT_EQ(p.random_action(EnvObservation{}), 0u);
    ScenarioConfig c;
    const auto r1 = evaluate_policy(c, 30, 9);
    const auto r2 = evaluate_policy(c, 30, 9);
    ASSERT_EQ(r1.size(), 30u);
    for (std::size_t i = 0; i < r1.size(); ++i) EXPECT_EQ(r1[i].episode_return, r2[i].episode_return);
    EXPECT_TRUE(evaluate_policy(c, 0, 9).empty());
}

TEST(RandomPolicy, ReturnsHaveNoTrend) {
    ScenarioConfig c;
    const auto rows = evaluate_policy(c, 2000, 31);
    std::vector<double> r;
    for (const auto& m : rows) {
        r.push_back(m.episode_return);
        EXPECT_EQ(m.epsilon, 1.0);
    }
    EXPECT_GE(stats::slope_test(r).test.p_two_sided, 0.05);
}
