#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dccmkp/evaluation.hpp"
#include "oracles.hpp"

using namespace dccmkp;

namespace {

auto feasible_snapshot(std::int64_t profit) -> Snapshot
{
    Snapshot s;
    s.has_feasible = true;
    s.best_feasible_profit = profit;
    s.feasible_count = 1;
    return s;
}

auto infeasible_snapshot(double violation) -> Snapshot
{
    Snapshot s;
    s.min_violation = violation;
    return s;
}

auto baseline(std::int64_t p) -> BaselineOptimum
{
    return BaselineOptimum{"x", p, BaselineMethod::EXHAUSTIVE, 0.0, std::nullopt};
}

auto seq(double from, double to) -> std::vector<double>
{
    std::vector<double> v;
    for (auto x = from; x <= to; x += 1.0) {
        v.push_back(x);
    }
    return v;
}

} // namespace

TEST(BestProfit, Examples)
{
    RunRecord r;
    r.final_front = {ArchiveEntry{0, 0.0, {0, 0}}};
    EXPECT_EQ(best_profit(r), 0);
    r.final_front = {ArchiveEntry{10, 1.0, {}}, ArchiveEntry{20, 2.0, {}}, ArchiveEntry{15, 1.5, {}}};
    EXPECT_EQ(best_profit(r), 20);
    std::swap(r.final_front[0], r.final_front[1]);
    EXPECT_EQ(best_profit(r), 20);
}

TEST(OfflineError, StaticRules)
{
    RunRecord r;
    r.snapshots = {feasible_snapshot(950)};
    std::vector<BaselineOptimum> const b{baseline(1000)};
    EXPECT_EQ(offline_error(r, b).mean_epsilon, 50.0);
    r.snapshots = {infeasible_snapshot(20.0)};
    EXPECT_EQ(offline_error(r, b).mean_epsilon, 1020.0);
}

TEST(OfflineError, DynamicMeanOverChanges)
{
    RunRecord r;
    r.dynamic = true;
    r.num_changes = 3;
    r.snapshots = {feasible_snapshot(100), feasible_snapshot(200), infeasible_snapshot(5.0), feasible_snapshot(1)};
    std::vector<BaselineOptimum> const b{baseline(100), baseline(210), baseline(300), baseline(999)};
    auto const e = offline_error(r, b);
    EXPECT_EQ(e.epsilon_per_change, (std::vector<double>{0.0, 10.0, 305.0}));
    EXPECT_DOUBLE_EQ(e.mean_epsilon, 105.0);

    r.snapshots = {feasible_snapshot(100), feasible_snapshot(210), feasible_snapshot(300), feasible_snapshot(0)};
    EXPECT_EQ(offline_error(r, b).mean_epsilon, 0.0);
}

TEST(OfflineError, MissingBaseline)
{
    RunRecord r;
    r.dynamic = true;
    r.num_changes = 2;
    r.snapshots = {feasible_snapshot(1), feasible_snapshot(2), feasible_snapshot(3)};
    std::vector<BaselineOptimum> const b{baseline(5)};
    EXPECT_THROW(offline_error(r, b), ConfigError);
}

TEST(OfflineError, NonNegativeAgainstExactBaseline)
{
    Stream rng(1);
    for (int t = 0; t < 1000; ++t) {
        auto const opt = rng.uniform_int(0, 1000);
        auto const s = rng.bernoulli(0.5) ? feasible_snapshot(rng.uniform_int(0, opt)) : infeasible_snapshot(rng.uniform(0, 50));
        ASSERT_GE(partial_offline_error(s, opt), 0.0);
    }
}

TEST(Descriptive, MeanAndSampleStd)
{
    std::vector<double> const x{2, 4, 4, 4, 5, 5, 7, 9};
    EXPECT_DOUBLE_EQ(mean(x), 5.0);
    EXPECT_DOUBLE_EQ(stddev(x), std::sqrt(32.0 / 7.0));
    EXPECT_EQ(stddev(std::vector<double>{3.0}), 0.0);
}

TEST(KruskalWallis, HandComputed)
{
    std::vector<std::vector<double>> const g{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    auto const r = kruskal_wallis(g);
    EXPECT_NEAR(r.h, 7.2, 1e-12);
    EXPECT_NEAR(r.p_value, std::exp(-3.6), 1e-12);
    EXPECT_TRUE(r.significant);
}

TEST(KruskalWallis, IdenticalGroups)
{
    std::vector<std::vector<double>> const g{{4, 4, 4}, {4, 4}, {4, 4, 4, 4}};
    auto const r = kruskal_wallis(g);
    EXPECT_EQ(r.h, 0.0);
    EXPECT_FALSE(r.significant);
}

TEST(KruskalWallis, Errors)
{
    std::vector<std::vector<double>> const one{{1, 2}};
    EXPECT_THROW(kruskal_wallis(one), ContractError);
    std::vector<std::vector<double>> const empty{{1, 2}, {}};
    EXPECT_THROW(kruskal_wallis(empty), ContractError);
}

TEST(KruskalWallis, MatchesCountingOracleAndIsRankInvariant)
{
    Stream rng(2);
    for (int t = 0; t < 300; ++t) {
        auto const k = static_cast<std::size_t>(rng.uniform_int(2, 5));
        std::vector<std::vector<double>> g(k);
        std::vector<std::vector<double>> e(k);
        for (std::size_t i = 0; i < k; ++i) {
            auto const n = rng.uniform_int(1, 12);
            for (int j = 0; j < n; ++j) {
                auto const x = t % 2 == 0 ? static_cast<double>(rng.uniform_int(0, 6)) : rng.normal(0.5 * i, 1.0);
                g[i].push_back(x);
                e[i].push_back(std::exp(x));
            }
        }
        auto const h = kruskal_wallis(g).h;
        ASSERT_NEAR(h, std::max(0.0, oracle::kruskal_wallis_h(g)), 1e-9);
        ASSERT_NEAR(kruskal_wallis(e).h, h, 1e-9);
    }
}

TEST(KruskalWallis, NullRejectionRate)
{
    Stream rng(3);
    int rejected = 0;
    constexpr int reps = 1000;
    for (int t = 0; t < reps; ++t) {
        std::vector<std::vector<double>> g(2);
        for (auto& grp : g) {
            for (int j = 0; j < 30; ++j) {
                grp.push_back(rng.normal());
            }
        }
        rejected += kruskal_wallis(g).significant ? 1 : 0;
    }
    EXPECT_NEAR(rejected / static_cast<double>(reps), 0.05, 0.02);
}

TEST(MannWhitney, ExactMatchesEnumeration)
{
    Stream rng(4);
    for (int t = 0; t < 200; ++t) {
        auto const n1 = static_cast<std::size_t>(rng.uniform_int(1, 8));
        auto const n2 = static_cast<std::size_t>(rng.uniform_int(1, 8));
        std::vector<double> a(n1);
        std::vector<double> b(n2);
        for (auto& x : a) {
            x = rng.uniform();
        }
        for (auto& x : b) {
            x = rng.uniform() + 0.3;
        }
        auto const r = mann_whitney(a, b);
        ASSERT_TRUE(r.exact);
        ASSERT_NEAR(r.p_value, oracle::rank_sum_exact_p(n1, n2, r.u), 1e-12);
        ASSERT_NEAR(mann_whitney(b, a).p_value, r.p_value, 1e-12);
    }
}

TEST(MannWhitney, NormalApproximationWithTies)
{
    std::vector<double> const a{1, 1, 2, 2, 3, 3, 3, 4};
    std::vector<double> const b{3, 4, 4, 5, 5, 6, 6, 6};
    auto const r = mann_whitney(a, b);
    EXPECT_FALSE(r.exact);
    EXPECT_GT(r.p_value, 0.0);
    EXPECT_LT(r.p_value, 0.05);
    EXPECT_NEAR(mann_whitney(b, a).p_value, r.p_value, 1e-15);
    std::vector<double> const same{2, 2, 2};
    EXPECT_EQ(mann_whitney(same, same).p_value, 1.0);
}

TEST(Posthoc, SeparatedMiddleGroup)
{
    std::vector<std::vector<double>> const g{seq(1, 10), seq(101, 110), seq(1, 10)};
    auto const r = bonferroni_posthoc(g);
    EXPECT_EQ(r.comparisons, 3U);
    EXPECT_EQ(r.markers[0][1], '-');
    EXPECT_EQ(r.markers[1][0], '+');
    EXPECT_EQ(r.markers[2][1], '-');
    EXPECT_EQ(r.markers[1][2], '+');
    EXPECT_EQ(r.markers[0][2], '*');
    EXPECT_EQ(r.markers[0][0], '.');
    EXPECT_NEAR(r.p_values[0][1], 2.0 / 184756.0, 1e-15);

    PosthocOptions lower;
    lower.higher_is_better = false;
    EXPECT_EQ(bonferroni_posthoc(g, lower).markers[0][1], '+');
}

TEST(Posthoc, FourGroupsSixTests)
{
    std::vector<std::vector<double>> const g{seq(1, 8), seq(11, 18), seq(21, 28), seq(31, 38)};
    auto const r = bonferroni_posthoc(g);
    EXPECT_EQ(r.comparisons, 6U);
    EXPECT_DOUBLE_EQ(r.adjusted_level, 0.05 / 6.0);
}

TEST(Posthoc, RequiresOverallSignificance)
{
    std::vector<std::vector<double>> const g{{1, 2, 3}, {1, 2, 3}};
    EXPECT_THROW(bonferroni_posthoc(g), ContractError);
    auto const c = compare_groups(g);
    EXPECT_FALSE(c.overall.significant);
    EXPECT_EQ(c.posthoc.markers[0][1], '*');
    EXPECT_EQ(c.posthoc.markers[1][0], '*');
}

TEST(Posthoc, MarkersAntisymmetric)
{
    Stream rng(5);
    for (int t = 0; t < 100; ++t) {
        auto const k = static_cast<std::size_t>(rng.uniform_int(2, 5));
        std::vector<std::vector<double>> g(k);
        for (std::size_t i = 0; i < k; ++i) {
            auto const shift = rng.uniform(0, 3);
            for (int j = 0; j < 15; ++j) {
                g[i].push_back(std::round(rng.normal(shift, 1.0) * 4.0));
            }
        }
        PosthocOptions opts;
        opts.require_overall_significance = false;
        auto const r = bonferroni_posthoc(g, opts);
        for (std::size_t a = 0; a < k; ++a) {
            ASSERT_EQ(r.markers[a][a], '.');
            for (std::size_t b = 0; b < k; ++b) {
                if (r.markers[a][b] == '+') {
                    ASSERT_EQ(r.markers[b][a], '-');
                }
                if (r.markers[a][b] == '*') {
                    ASSERT_EQ(r.markers[b][a], '*');
                }
            }
        }
    }
}
