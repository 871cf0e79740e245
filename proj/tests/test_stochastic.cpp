#include <cmath>

#include <gtest/gtest.h>

#include "dccmkp/rng.hpp"
#include "dccmkp/stochastic.hpp"
#include "oracles.hpp"

using namespace dccmkp;

namespace {

auto two_item_instance() -> Instance
{
    Instance inst;
    inst.items = {{110, 100, 25.0}, {210, 200, 75.0}};
    inst.capacities = {1000.0};
    inst.set_label = SetLabel::CUSTOM;
    inst.variance_regime = VarianceRegime::CUSTOM;
    return inst;
}

} // namespace

TEST(Quantile, KnownValues)
{
    EXPECT_EQ(normal_quantile(0.5), 0.0);
    EXPECT_NEAR(normal_quantile(0.99), 2.3263478740, 1e-10);
    EXPECT_NEAR(normal_quantile(1.0 - 1e-6), 4.7534243088, 1e-10);
}

TEST(Quantile, AgreesWithBoost)
{
    for (double a : {0.5, 0.6, 0.9, 0.99, 1 - 1e-4, 1 - 1e-6, 1 - 1e-8, 0.01, 1e-9}) {
        EXPECT_NEAR(normal_quantile(a), oracle::quantile(a), 1e-10) << a;
    }
}

TEST(Quantile, InversionAndMonotonicity)
{
    Stream rng(2);
    for (int i = 0; i < 1000; ++i) {
        auto const lo = std::log(1e-9);
        auto a = std::exp(rng.uniform(lo, std::log(0.5)));
        if (rng.bernoulli(0.5)) {
            a = 1.0 - a;
        }
        auto const z = normal_quantile(a);
        // compare on the tail that keeps the digits
        if (a > 0.5) {
            ASSERT_NEAR(normal_sf(z), 1.0 - a, 1e-10 * (1.0 - a) + 1e-16) << a;
        } else {
            ASSERT_NEAR(normal_cdf(z), a, 1e-10 * a + 1e-16) << a;
        }
    }
    double prev = normal_quantile(0.5);
    for (double a = 0.55; a < 1.0; a += 0.05) {
        auto z = normal_quantile(a);
        EXPECT_GE(z, prev);
        prev = z;
    }
}

TEST(Quantile, OutsideOpenIntervalRejected)
{
    EXPECT_THROW(normal_quantile(0.0), DomainError);
    EXPECT_THROW(normal_quantile(1.0), DomainError);
    EXPECT_THROW(normal_quantile(-0.1), DomainError);
    EXPECT_THROW(ConfidenceLevel(1.0), DomainError);
}

TEST(Loads, EmptySolution)
{
    auto inst = two_item_instance();
    auto loads = knapsack_loads(inst, Solution(2), ConfidenceLevel(0.99));
    ASSERT_EQ(loads.size(), 1U);
    EXPECT_EQ(loads[0], (KnapsackLoad{0.0, 0.0, 0.0}));
}

TEST(Loads, AlphaHalfIsMeanSum)
{
    auto inst = two_item_instance();
    auto loads = knapsack_loads(inst, Solution(std::vector<Gene>{1, 1}), ConfidenceLevel(0.5));
    EXPECT_DOUBLE_EQ(loads[0].chance_weight, 300.0);
    EXPECT_DOUBLE_EQ(loads[0].var_sum, 100.0);
}

TEST(Loads, AlphaPoint99)
{
    auto inst = two_item_instance();
    auto loads = knapsack_loads(inst, Solution(std::vector<Gene>{1, 1}), ConfidenceLevel(0.99));
    EXPECT_NEAR(loads[0].chance_weight, 323.2634787, 1e-7);
    EXPECT_NEAR(loads[0].chance_weight, 300.0 + oracle::quantile(0.99) * 10.0, 1e-9);
}

TEST(Loads, GeneOutOfRange)
{
    auto inst = two_item_instance();
    EXPECT_THROW(knapsack_loads(inst, Solution(std::vector<Gene>{2, 0}), ConfidenceLevel(0.9)), EncodingError);
    EXPECT_THROW(knapsack_loads(inst, Solution(std::vector<Gene>{-1, 0}), ConfidenceLevel(0.9)), EncodingError);
    EXPECT_THROW(knapsack_loads(inst, Solution(std::vector<Gene>{0}), ConfidenceLevel(0.9)), EncodingError);
}

TEST(Loads, MatchOracleOnRandomSolutions)
{
    auto inst = generate(SetLabel::FK1, 100, 10, Correlation::STRONG, VarianceRegime::V2, 5);
    ConfidenceLevel conf(1 - 1e-4);
    Stream rng(6);
    for (int t = 0; t < 200; ++t) {
        Solution s(100);
        for (auto& g : s.genes) {
            g = static_cast<Gene>(rng.uniform_int(0, 10));
        }
        auto loads = knapsack_loads(inst, s, conf);
        auto expect = oracle::chance_weights(inst, s.genes, oracle::quantile(1 - 1e-4));
        for (std::size_t i = 0; i < 10; ++i) {
            ASSERT_NEAR(loads[i].chance_weight, expect[i], 1e-9 * expect[i] + 1e-9);
            ASSERT_GE(loads[i].chance_weight, loads[i].mean_sum);
        }
    }
}

TEST(Loads, MonotoneInAlphaAndVariance)
{
    auto inst = generate(SetLabel::CUSTOM, 12, 3, Correlation::STRONG, VarianceRegime::V1, 8);
    Stream rng(1);
    for (int t = 0; t < 50; ++t) {
        Solution s(12);
        for (auto& g : s.genes) {
            g = static_cast<Gene>(rng.uniform_int(0, 3));
        }
        std::vector<double> prev(3, 0.0);
        for (double a : {0.5, 0.9, 0.99, 1 - 1e-4, 1 - 1e-6, 1 - 1e-8}) {
            auto loads = knapsack_loads(inst, s, ConfidenceLevel(a));
            for (std::size_t i = 0; i < 3; ++i) {
                ASSERT_GE(loads[i].chance_weight, prev[i]);
                prev[i] = loads[i].chance_weight;
            }
        }
        auto bumped = inst;
        auto const j = rng.index(12);
        bumped.items[j].variance *= 3.0;
        auto before = knapsack_loads(inst, s, ConfidenceLevel(0.99));
        auto after = knapsack_loads(bumped, s, ConfidenceLevel(0.99));
        for (std::size_t i = 0; i < 3; ++i) {
            ASSERT_GE(after[i].chance_weight, before[i].chance_weight);
        }
    }
}

TEST(Violation, HandValues)
{
    std::vector<double> const caps{100.0, 100.0};
    auto loads = [](double a, double b) {
        return std::vector<KnapsackLoad>{{a, 0.0, a}, {b, 0.0, b}};
    };
    EXPECT_EQ(violation(loads(100, 50), caps), 0.0);
    EXPECT_EQ(violation(loads(110, 90), caps), 10.0);
    EXPECT_EQ(violation(loads(110, 120), caps), 30.0);
}

TEST(Violation, ZeroIffAllFit)
{
    Stream rng(3);
    for (int t = 0; t < 1000; ++t) {
        std::vector<KnapsackLoad> loads(4);
        std::vector<double> caps(4);
        bool fits = true;
        for (std::size_t i = 0; i < 4; ++i) {
            auto w = std::floor(rng.uniform(0, 20));
            caps[i] = std::floor(rng.uniform(0, 20));
            loads[i] = {w, 0.0, w};
            fits = fits && w <= caps[i];
        }
        auto e = violation(loads, caps);
        ASSERT_GE(e, 0.0);
        ASSERT_EQ(e == 0.0, fits);
    }
}

TEST(MonteCarlo, EmptySolutionAlwaysFits)
{
    auto inst = generate(SetLabel::CUSTOM, 5, 2, Correlation::STRONG, VarianceRegime::V1, 1);
    auto p = monte_carlo_feasibility(inst, Solution(5), 1000, 7);
    for (auto x : p) {
        EXPECT_EQ(x, 1.0);
    }
}

TEST(MonteCarlo, ZeroCapacityNeverFits)
{
    auto inst = generate(SetLabel::CUSTOM, 5, 1, Correlation::STRONG, VarianceRegime::V1, 1);
    std::vector<double> caps{0.0};
    auto p = monte_carlo_feasibility(inst, Solution(std::vector<Gene>{1, 0, 0, 0, 0}), caps, 10000, 7);
    EXPECT_LT(p[0], 1e-3);
}

TEST(MonteCarlo, TightCapacityHitsAlpha)
{
    auto inst = generate(SetLabel::CUSTOM, 6, 1, Correlation::STRONG, VarianceRegime::V2, 4);
    Solution all(std::vector<Gene>(6, 1));
    ConfidenceLevel conf(0.99);
    auto loads = knapsack_loads(inst, all, conf);
    std::vector<double> caps{loads[0].chance_weight};
    constexpr std::size_t samples = 100000;
    auto p = monte_carlo_feasibility(inst, all, caps, samples, 21);
    EXPECT_NEAR(p[0], 0.99, 3.0 * std::sqrt(0.99 * 0.01 / samples));
}

TEST(MonteCarlo, DeterministicGivenSeed)
{
    auto inst = generate(SetLabel::CUSTOM, 8, 2, Correlation::STRONG, VarianceRegime::V1, 2);
    Solution s(std::vector<Gene>{1, 2, 1, 2, 0, 1, 2, 0});
    EXPECT_EQ(monte_carlo_feasibility(inst, s, 5000, 3), monte_carlo_feasibility(inst, s, 5000, 3));
}
