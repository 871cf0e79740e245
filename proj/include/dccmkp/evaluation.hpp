#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "dccmkp/error.hpp"
#include "dccmkp/oracle.hpp"
#include "dccmkp/run_record.hpp"
#include "dccmkp/stochastic.hpp"

namespace dccmkp {

// ---------------------------------------------------------------------------
// run metrics

inline auto best_profit(RunRecord const& record) -> std::int64_t
{
    std::int64_t best = 0;
    for (auto const& e : record.final_front) {
        best = std::max(best, e.profit);
    }
    return best;
}

struct OfflineError {
    std::vector<double> epsilon_per_change;
    double mean_epsilon = 0.0;
    std::vector<BaselineOptimum> baselines;
};

// Snapshots that enter the offline error: the nu pre-change snapshots of a
// dynamic run, or the single final snapshot of a static run.
inline auto scored_snapshot_count(RunRecord const& record) noexcept -> std::size_t
{
    return record.dynamic ? record.num_changes : 1;
}

inline auto partial_offline_error(Snapshot const& s, std::int64_t optimum) noexcept -> double
{
    if (s.has_feasible) {
        return static_cast<double>(optimum - s.best_feasible_profit);
    }
    return static_cast<double>(optimum) + s.min_violation;
}

/// Partial offline errors against per-period optima; `baselines[k]` belongs
/// to the capacities of snapshot k.
inline auto offline_error(RunRecord const& record, std::span<BaselineOptimum const> baselines) -> OfflineError
{
    auto const count = scored_snapshot_count(record);
    if (record.snapshots.size() < count) {
        throw ConfigError("run record holds " + std::to_string(record.snapshots.size()) + " snapshots, expected " +
                          std::to_string(count));
    }
    if (baselines.size() < count) {
        throw ConfigError("missing per-period baseline: have " + std::to_string(baselines.size()) + ", need " +
                          std::to_string(count));
    }
    OfflineError out;
    out.baselines.assign(baselines.begin(), baselines.begin() + static_cast<std::ptrdiff_t>(count));
    for (std::size_t k = 0; k < count; ++k) {
        out.epsilon_per_change.push_back(partial_offline_error(record.snapshots[k], baselines[k].profit));
    }
    out.mean_epsilon = out.epsilon_per_change.empty()
                           ? 0.0
                           : std::accumulate(out.epsilon_per_change.begin(), out.epsilon_per_change.end(), 0.0) /
                                 static_cast<double>(out.epsilon_per_change.size());
    return out;
}

// ---------------------------------------------------------------------------
// descriptive

inline auto mean(std::span<double const> xs) -> double
{
    if (xs.empty()) {
        return 0.0;
    }
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline auto stddev(std::span<double const> xs) -> double
{
    if (xs.size() < 2) {
        return 0.0;
    }
    auto const mu = mean(xs);
    double ss = 0.0;
    for (auto x : xs) {
        ss += (x - mu) * (x - mu);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// ---------------------------------------------------------------------------
// rank tests

namespace detail {

// Mid-ranks (1-based) of the pooled values and the tie term sum(t^3 - t).
inline auto mid_ranks(std::span<double const> values, double* tie_term = nullptr) -> std::vector<double>
{
    auto const n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    double ties = 0.0;
    std::size_t i = 0;
    while (i < n) {
        auto j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        auto const r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (auto k = i; k <= j; ++k) {
            ranks[order[k]] = r;
        }
        auto const t = static_cast<double>(j - i + 1);
        ties += t * t * t - t;
        i = j + 1;
    }
    if (tie_term != nullptr) {
        *tie_term = ties;
    }
    return ranks;
}

inline auto chi_square_sf(double x, double dof) -> double
{
    if (x <= 0.0) {
        return 1.0;
    }
    return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

// Number of arrangements giving each value of U for sample sizes (n1, n2), no ties.
inline auto mann_whitney_counts(std::size_t n1, std::size_t n2) -> std::vector<double>
{
    // f[i][j][u]: arrangements of i first-sample and j second-sample values with statistic u.
    auto const umax = n1 * n2;
    std::vector<std::vector<std::vector<double>>> f(
        n1 + 1, std::vector<std::vector<double>>(n2 + 1, std::vector<double>(umax + 1, 0.0)));
    for (std::size_t i = 0; i <= n1; ++i) {
        for (std::size_t j = 0; j <= n2; ++j) {
            if (i == 0 || j == 0) {
                f[i][j][0] = 1.0;
                continue;
            }
            for (std::size_t u = 0; u <= i * j; ++u) {
                // largest value from sample 1 beats all j of sample 2, or largest is from sample 2
                double v = f[i][j - 1][u];
                if (u >= j) {
                    v += f[i - 1][j][u - j];
                }
                f[i][j][u] = v;
            }
        }
    }
    return f[n1][n2];
}

} // namespace detail

struct KruskalWallisResult {
    double h = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

inline constexpr double kSignificanceLevel = 0.05;

/// Kruskal-Wallis H with tie correction; significance from the chi-square
/// approximation with k - 1 degrees of freedom.
inline auto kruskal_wallis(std::span<std::vector<double> const> groups, double level = kSignificanceLevel)
    -> KruskalWallisResult
{
    if (groups.size() < 2) {
        throw ContractError("Kruskal-Wallis needs at least two groups");
    }
    std::vector<double> pooled;
    for (auto const& g : groups) {
        if (g.empty()) {
            throw ContractError("Kruskal-Wallis groups must be non-empty");
        }
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    double ties = 0.0;
    auto const ranks = detail::mid_ranks(pooled, &ties);
    auto const n = static_cast<double>(pooled.size());
    auto const correction = 1.0 - ties / (n * n * n - n);
    KruskalWallisResult out;
    if (correction <= 0.0) {
        return out;
    }
    double sum = 0.0;
    std::size_t offset = 0;
    for (auto const& g : groups) {
        double r = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            r += ranks[offset + i];
        }
        offset += g.size();
        sum += r * r / static_cast<double>(g.size());
    }
    out.h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
    out.h = std::max(out.h, 0.0);
    out.p_value = detail::chi_square_sf(out.h, static_cast<double>(groups.size() - 1));
    out.significant = out.p_value < level;
    return out;
}

struct RankSumResult {
    double u = 0.0;         // statistic of the first sample
    double p_value = 1.0;   // two-sided
    double mean_rank_a = 0.0;
    double mean_rank_b = 0.0;
    bool exact = false;
};

inline constexpr std::size_t kExactRankSumLimit = 30;

/// Two-sided Mann-Whitney rank-sum test. Exact null distribution when both
/// samples have at most 30 values and there are no ties, otherwise the normal
/// approximation with tie and continuity corrections.
inline auto mann_whitney(std::span<double const> a, std::span<double const> b) -> RankSumResult
{
    if (a.empty() || b.empty()) {
        throw ContractError("rank-sum samples must be non-empty");
    }
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    double ties = 0.0;
    auto const ranks = detail::mid_ranks(pooled, &ties);
    auto const n1 = static_cast<double>(a.size());
    auto const n2 = static_cast<double>(b.size());
    double ra = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ra += ranks[i];
    }
    RankSumResult out;
    out.u = ra - n1 * (n1 + 1.0) / 2.0;
    out.mean_rank_a = ra / n1;
    out.mean_rank_b = (static_cast<double>(pooled.size()) * (static_cast<double>(pooled.size()) + 1.0) / 2.0 - ra) / n2;

    if (ties == 0.0 && a.size() <= kExactRankSumLimit && b.size() <= kExactRankSumLimit) {
        auto const counts = detail::mann_whitney_counts(a.size(), b.size());
        auto const total = std::accumulate(counts.begin(), counts.end(), 0.0);
        auto const u = static_cast<std::size_t>(std::llround(out.u));
        double lower = 0.0;
        double upper = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (k <= u) {
                lower += counts[k];
            }
            if (k >= u) {
                upper += counts[k];
            }
        }
        out.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / total);
        out.exact = true;
        return out;
    }
    auto const nn = n1 + n2;
    auto const mu = n1 * n2 / 2.0;
    auto const var = n1 * n2 / 12.0 * ((nn + 1.0) - ties / (nn * (nn - 1.0)));
    if (var <= 0.0) {
        out.p_value = 1.0;
        return out;
    }
    auto const diff = std::abs(out.u - mu);
    auto const z = std::max(0.0, diff - 0.5) / std::sqrt(var);
    out.p_value = std::min(1.0, 2.0 * normal_sf(z));
    return out;
}

struct PosthocOptions {
    double level = kSignificanceLevel;
    bool higher_is_better = true;
    bool require_overall_significance = true;
};

/// Pairwise comparison markers: markers[a][b] is '+' when group a is
/// significantly better than group b, '-' when significantly worse and '*'
/// otherwise ('.' on the diagonal).
struct PosthocResult {
    std::vector<std::vector<char>> markers;
    std::vector<std::vector<double>> p_values;
    double adjusted_level = 0.0;
    std::size_t comparisons = 0;
};

/// Bonferroni-adjusted pairwise rank-sum tests at level / C(k, 2).
inline auto bonferroni_posthoc(std::span<std::vector<double> const> groups, PosthocOptions const& opts = {})
    -> PosthocResult
{
    auto const k = groups.size();
    if (k < 2) {
        throw ContractError("post-hoc comparison needs at least two groups");
    }
    if (opts.require_overall_significance && !kruskal_wallis(groups, opts.level).significant) {
        throw ContractError("post-hoc comparison requested without a significant Kruskal-Wallis result");
    }
    PosthocResult out;
    out.comparisons = k * (k - 1) / 2;
    out.adjusted_level = opts.level / static_cast<double>(out.comparisons);
    out.markers.assign(k, std::vector<char>(k, '*'));
    out.p_values.assign(k, std::vector<double>(k, 1.0));
    for (std::size_t a = 0; a < k; ++a) {
        out.markers[a][a] = '.';
        for (std::size_t b = a + 1; b < k; ++b) {
            auto const r = mann_whitney(groups[a], groups[b]);
            out.p_values[a][b] = out.p_values[b][a] = r.p_value;
            if (r.p_value < out.adjusted_level && r.mean_rank_a != r.mean_rank_b) {
                auto const a_larger = r.mean_rank_a > r.mean_rank_b;
                auto const a_better = a_larger == opts.higher_is_better;
                out.markers[a][b] = a_better ? '+' : '-';
                out.markers[b][a] = a_better ? '-' : '+';
            }
        }
    }
    return out;
}

struct GroupComparison {
    KruskalWallisResult overall;
    PosthocResult posthoc; // all '*' when the overall test is not significant
};

inline auto compare_groups(std::span<std::vector<double> const> groups, PosthocOptions opts = {}) -> GroupComparison
{
    GroupComparison out;
    out.overall = kruskal_wallis(groups, opts.level);
    opts.require_overall_significance = false;
    if (out.overall.significant) {
        out.posthoc = bonferroni_posthoc(groups, opts);
    } else {
        auto const k = groups.size();
        out.posthoc.comparisons = k * (k - 1) / 2;
        out.posthoc.adjusted_level = opts.level / static_cast<double>(out.posthoc.comparisons);
        out.posthoc.markers.assign(k, std::vector<char>(k, '*'));
        out.posthoc.p_values.assign(k, std::vector<double>(k, 1.0));
        for (std::size_t a = 0; a < k; ++a) {
            out.posthoc.markers[a][a] = '.';
        }
    }
    return out;
}

} // namespace dccmkp
