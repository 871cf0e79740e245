#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "dccmkp/encoding.hpp"
#include "dccmkp/error.hpp"
#include "dccmkp/instance.hpp"
#include "dccmkp/rng.hpp"

namespace dccmkp {

inline auto normal_cdf(double z) noexcept -> double
{
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// 1 - Phi(z), accurate in the upper tail.
inline auto normal_sf(double z) noexcept -> double
{
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

/// Standard normal quantile by bisection on an erfc-based CDF.
///
/// For alpha >= 1/2 the search matches the upper tail 1 - alpha (exact in
/// binary for alpha close to 1), otherwise the lower tail alpha. Bisection
/// runs until the bracket stops shrinking in double precision.
inline auto normal_quantile(double alpha) -> double
{
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("normal quantile is defined only for alpha in (0, 1)");
    }
    if (alpha == 0.5) {
        return 0.0;
    }
    bool const upper = alpha > 0.5;
    auto const tail = upper ? 1.0 - alpha : alpha;
    // tail(z) = P(Z > z) for z >= 0; solve tail(z) = target on [0, 40].
    double lo = 0.0;
    double hi = 40.0;
    for (int iter = 0; iter < 2000; ++iter) {
        auto const mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (normal_sf(mid) > tail) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    auto const z = 0.5 * (lo + hi);
    return upper ? z : -z;
}

/// A chance-constraint confidence level with its cached normal quantile.
///
/// Accepts alpha in [1/2, 1): the quantile is then non-negative, so a chance
/// weight never falls below the mean weight.
class ConfidenceLevel {
public:
    explicit ConfidenceLevel(double alpha) : alpha_(alpha)
    {
        if (!(alpha >= 0.5 && alpha < 1.0)) {
            throw DomainError("confidence level must lie in [0.5, 1)");
        }
        k_alpha_ = normal_quantile(alpha);
    }

    [[nodiscard]] auto alpha() const noexcept -> double { return alpha_; }
    [[nodiscard]] auto k_alpha() const noexcept -> double { return k_alpha_; }

private:
    double alpha_;
    double k_alpha_ = 0.0;
};

struct KnapsackLoad {
    double mean_sum = 0.0;
    double var_sum = 0.0;
    double chance_weight = 0.0;

    friend auto operator==(KnapsackLoad const&, KnapsackLoad const&) -> bool = default;
};

inline auto chance_weight(double mean_sum, double var_sum, ConfidenceLevel const& conf) noexcept -> double
{
    return mean_sum + conf.k_alpha() * std::sqrt(var_sum);
}

// Aggregates items into knapsacks in index order; writes m loads into `out`.
inline void knapsack_loads_into(Instance const& inst, Solution const& sol, ConfidenceLevel const& conf,
                                std::span<KnapsackLoad> out)
{
    auto const n = inst.item_count();
    auto const m = inst.knapsack_count();
    if (sol.size() != n) {
        throw EncodingError("solution length " + std::to_string(sol.size()) + " differs from n = " +
                            std::to_string(n));
    }
    for (auto& l : out) {
        l = KnapsackLoad{};
    }
    for (std::size_t j = 0; j < n; ++j) {
        auto const g = sol.genes[j];
        if (g == 0) {
            continue;
        }
        if (g < 0 || static_cast<std::size_t>(g) > m) {
            throw EncodingError("gene " + std::to_string(g) + " outside {0, ..., " + std::to_string(m) + "}");
        }
        auto& l = out[static_cast<std::size_t>(g) - 1];
        l.mean_sum += static_cast<double>(inst.items[j].mean_weight);
        l.var_sum += inst.items[j].variance;
    }
    for (auto& l : out) {
        l.chance_weight = chance_weight(l.mean_sum, l.var_sum, conf);
    }
}

inline auto knapsack_loads(Instance const& inst, Solution const& sol, ConfidenceLevel const& conf)
    -> std::vector<KnapsackLoad>
{
    std::vector<KnapsackLoad> loads(inst.knapsack_count());
    knapsack_loads_into(inst, sol, conf, loads);
    return loads;
}

// Sum of max(0, chance weight - capacity); zero exactly when every chance constraint holds.
inline auto violation(std::span<KnapsackLoad const> loads, std::span<double const> capacities) -> double
{
    if (loads.size() != capacities.size()) {
        throw EncodingError("loads and capacities differ in length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < loads.size(); ++i) {
        if (loads[i].chance_weight > capacities[i]) {
            total += loads[i].chance_weight - capacities[i];
        }
    }
    return total;
}

/// Empirical Pr(sampled weight of knapsack i <= capacity) with item weights
/// drawn independently from N(mu_j, sigma_j^2).
inline auto monte_carlo_feasibility(Instance const& inst, Solution const& sol, std::span<double const> capacities,
                                    std::size_t samples, std::uint64_t seed) -> std::vector<double>
{
    if (samples == 0) {
        throw DomainError("need at least one sample");
    }
    auto const m = inst.knapsack_count();
    auto const assignment = decode(sol, m);
    std::vector<double> prob(m, 1.0);
    Stream const root(seed);
    for (std::size_t i = 0; i < m; ++i) {
        auto const& members = assignment.knapsacks[i];
        auto rng = root.substream("knapsack", i);
        std::size_t hits = 0;
        for (std::size_t s = 0; s < samples; ++s) {
            double w = 0.0;
            for (auto j : members) {
                auto const& item = inst.items[j];
                w += rng.normal(static_cast<double>(item.mean_weight), std::sqrt(item.variance));
            }
            hits += w <= capacities[i] ? 1U : 0U;
        }
        prob[i] = static_cast<double>(hits) / static_cast<double>(samples);
    }
    return prob;
}

inline auto monte_carlo_feasibility(Instance const& inst, Solution const& sol, std::size_t samples,
                                    std::uint64_t seed) -> std::vector<double>
{
    return monte_carlo_feasibility(inst, sol, inst.capacities, samples, seed);
}

} // namespace dccmkp
