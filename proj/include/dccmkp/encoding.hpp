#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dccmkp/error.hpp"
#include "dccmkp/rng.hpp"

namespace dccmkp {

using Gene = std::int32_t;

// x_j = 0 leaves item j unassigned, x_j = i (1 <= i <= m) puts it in knapsack i.
// An item can therefore never sit in two knapsacks.
struct Solution {
    std::vector<Gene> genes;

    Solution() = default;
    explicit Solution(std::vector<Gene> g) : genes(std::move(g)) {}
    explicit Solution(std::size_t n) : genes(n, 0) {}

    [[nodiscard]] auto size() const noexcept -> std::size_t { return genes.size(); }

    friend auto operator==(Solution const&, Solution const&) -> bool = default;
};

struct VariationConfig {
    double mutation_prob = 0.01;
    double crossover_prob = 0.9;
    double mutation_distribution_index = 20.0;
    double crossover_distribution_index = 20.0;
    // Probability that SBX recombines a given gene pair (otherwise the pair is copied).
    double crossover_gene_prob = 0.5;
};

inline void validate(VariationConfig const& cfg)
{
    if (!(cfg.mutation_prob >= 0.0 && cfg.mutation_prob <= 1.0) ||
        !(cfg.crossover_prob >= 0.0 && cfg.crossover_prob <= 1.0) ||
        !(cfg.crossover_gene_prob >= 0.0 && cfg.crossover_gene_prob <= 1.0)) {
        throw ConfigError("variation probabilities must lie in [0, 1]");
    }
    if (!(cfg.mutation_distribution_index > 0.0) || !(cfg.crossover_distribution_index > 0.0)) {
        throw ConfigError("distribution indices must be positive");
    }
}

inline void check_genes(Solution const& s, std::size_t m)
{
    for (auto g : s.genes) {
        if (g < 0 || static_cast<std::size_t>(g) > m) {
            throw EncodingError("gene " + std::to_string(g) + " outside {0, ..., " + std::to_string(m) + "}");
        }
    }
}

namespace detail {

inline auto round_clamp(double v, std::size_t m) noexcept -> Gene
{
    auto const r = std::round(v); // half away from zero
    return static_cast<Gene>(std::clamp(r, 0.0, static_cast<double>(m)));
}

} // namespace detail

inline auto random_solution(std::size_t n, std::size_t m, Stream& rng) -> Solution
{
    Solution s(n);
    for (auto& g : s.genes) {
        g = static_cast<Gene>(rng.uniform_int(0, static_cast<std::int64_t>(m)));
    }
    return s;
}

/// Integer simulated binary crossover on the domain [0, m].
///
/// Each gene pair is recombined with the bounded SBX of Deb and Agrawal
/// (with probability `crossover_gene_prob`, children swapped with
/// probability 1/2), then rounded half away from zero and clamped.
inline auto sbx_crossover(Solution const& a, Solution const& b, VariationConfig const& cfg, std::size_t m,
                          Stream& rng) -> std::pair<Solution, Solution>
{
    if (a.size() != b.size()) {
        throw EncodingError("crossover parents differ in length");
    }
    std::pair<Solution, Solution> out{a, b};
    if (!rng.bernoulli(cfg.crossover_prob)) {
        return out;
    }
    auto const eta = cfg.crossover_distribution_index;
    auto const lower = 0.0;
    auto const upper = static_cast<double>(m);
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (!rng.bernoulli(cfg.crossover_gene_prob)) {
            continue;
        }
        auto const x1 = static_cast<double>(a.genes[j]);
        auto const x2 = static_cast<double>(b.genes[j]);
        if (std::abs(x1 - x2) <= 1e-14) {
            continue;
        }
        auto const y1 = std::min(x1, x2);
        auto const y2 = std::max(x1, x2);
        auto const u = rng.uniform();

        auto spread = [&](double beta) {
            auto const alpha = 2.0 - std::pow(beta, -(eta + 1.0));
            auto const betaq = u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                                : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
            return betaq;
        };
        auto const beta_lo = 1.0 + 2.0 * (y1 - lower) / (y2 - y1);
        auto const beta_hi = 1.0 + 2.0 * (upper - y2) / (y2 - y1);
        auto c1 = 0.5 * ((y1 + y2) - spread(beta_lo) * (y2 - y1));
        auto c2 = 0.5 * ((y1 + y2) + spread(beta_hi) * (y2 - y1));
        if (rng.bernoulli(0.5)) {
            std::swap(c1, c2);
        }
        out.first.genes[j] = detail::round_clamp(c1, m);
        out.second.genes[j] = detail::round_clamp(c2, m);
    }
    return out;
}

/// Integer polynomial mutation on [0, m]; each gene is mutated independently
/// with probability `cfg.mutation_prob`, read at call time.
inline auto polynomial_mutation(Solution s, VariationConfig const& cfg, std::size_t m, Stream& rng) -> Solution
{
    if (m == 0 || cfg.mutation_prob <= 0.0) {
        return s;
    }
    auto const eta = cfg.mutation_distribution_index;
    auto const upper = static_cast<double>(m);
    auto const power = 1.0 / (eta + 1.0);
    for (auto& g : s.genes) {
        if (!rng.bernoulli(cfg.mutation_prob)) {
            continue;
        }
        auto const y = static_cast<double>(g);
        auto const d1 = y / upper;
        auto const d2 = (upper - y) / upper;
        auto const u = rng.uniform();
        double deltaq = 0.0;
        if (u < 0.5) {
            auto const val = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
            deltaq = std::pow(val, power) - 1.0;
        } else {
            auto const val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
            deltaq = 1.0 - std::pow(val, power);
        }
        g = detail::round_clamp(y + deltaq * upper, m);
    }
    return s;
}

// Knapsack i (1-based) owns knapsacks[i - 1]; items are 0-based indices in ascending order.
struct Assignment {
    std::vector<std::vector<std::size_t>> knapsacks;
    std::vector<std::size_t> unassigned;

    friend auto operator==(Assignment const&, Assignment const&) -> bool = default;
};

inline auto decode(Solution const& s, std::size_t m) -> Assignment
{
    check_genes(s, m);
    Assignment a;
    a.knapsacks.resize(m);
    for (std::size_t j = 0; j < s.size(); ++j) {
        auto const g = s.genes[j];
        if (g == 0) {
            a.unassigned.push_back(j);
        } else {
            a.knapsacks[static_cast<std::size_t>(g) - 1].push_back(j);
        }
    }
    return a;
}

inline auto encode(Assignment const& a, std::size_t n) -> Solution
{
    Solution s(n);
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < a.knapsacks.size(); ++i) {
        for (auto j : a.knapsacks[i]) {
            if (j >= n || seen[j]) {
                throw EncodingError("item " + std::to_string(j) + " assigned twice or out of range");
            }
            seen[j] = true;
            s.genes[j] = static_cast<Gene>(i + 1);
        }
    }
    return s;
}

} // namespace dccmkp
