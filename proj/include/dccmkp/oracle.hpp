#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dccmkp/encoding.hpp"
#include "dccmkp/error.hpp"
#include "dccmkp/instance.hpp"
#include "dccmkp/stochastic.hpp"

namespace dccmkp {

enum class BaselineMethod { EXACT_BB, EXHAUSTIVE, GREEDY_LB, EXTERNAL_FILE };

inline auto to_string(BaselineMethod m) -> std::string_view
{
    switch (m) {
    case BaselineMethod::EXACT_BB: return "EXACT_BB";
    case BaselineMethod::EXHAUSTIVE: return "EXHAUSTIVE";
    case BaselineMethod::GREEDY_LB: return "GREEDY_LB";
    case BaselineMethod::EXTERNAL_FILE: return "EXTERNAL_FILE";
    }
    return "EXTERNAL_FILE";
}

inline auto parse_baseline_method(std::string_view s) -> std::optional<BaselineMethod>
{
    if (s == "EXACT_BB") { return BaselineMethod::EXACT_BB; }
    if (s == "EXHAUSTIVE") { return BaselineMethod::EXHAUSTIVE; }
    if (s == "GREEDY_LB") { return BaselineMethod::GREEDY_LB; }
    if (s == "EXTERNAL_FILE") { return BaselineMethod::EXTERNAL_FILE; }
    return std::nullopt;
}

struct BaselineOptimum {
    std::string instance_id;
    std::int64_t profit = 0;
    BaselineMethod method = BaselineMethod::EXACT_BB;
    double gap = 0.0;              // relative: (upper bound - profit) / upper bound
    std::optional<Solution> solution; // witness, when the method produces one

    [[nodiscard]] auto exact() const noexcept -> bool
    {
        return (method == BaselineMethod::EXACT_BB || method == BaselineMethod::EXHAUSTIVE) && gap == 0.0;
    }
};

namespace detail {

inline auto is_chance_feasible(Instance const& inst, Solution const& sol, ConfidenceLevel const& conf,
                               std::span<double const> capacities) -> bool
{
    auto const loads = knapsack_loads(inst, sol, conf);
    return violation(loads, capacities) == 0.0;
}

inline auto solution_profit(Instance const& inst, Solution const& sol) -> std::int64_t
{
    std::int64_t p = 0;
    for (std::size_t j = 0; j < sol.size(); ++j) {
        if (sol.genes[j] != 0) {
            p += inst.items[j].profit;
        }
    }
    return p;
}

} // namespace detail

inline constexpr double kExhaustiveLimit = 1e8;

/// Enumerate all (m + 1)^n assignments; exact but only for tiny instances.
inline auto exhaustive_optimum(Instance const& inst, ConfidenceLevel const& conf, std::span<double const> capacities)
    -> BaselineOptimum
{
    auto const n = inst.item_count();
    auto const m = inst.knapsack_count();
    if (static_cast<double>(n) * std::log(static_cast<double>(m + 1)) > std::log(kExhaustiveLimit) + 1e-12) {
        throw SizeError("(m + 1)^n exceeds 1e8 assignments");
    }
    BaselineOptimum best{instance_id(inst), 0, BaselineMethod::EXHAUSTIVE, 0.0, Solution(n)};
    Solution sol(n);
    std::vector<KnapsackLoad> loads(m);
    for (;;) {
        knapsack_loads_into(inst, sol, conf, loads);
        if (violation(loads, capacities) == 0.0) {
            auto const p = detail::solution_profit(inst, sol);
            if (p > best.profit) {
                best.profit = p;
                best.solution = sol;
            }
        }
        std::size_t j = 0;
        while (j < n && static_cast<std::size_t>(sol.genes[j]) == m) {
            sol.genes[j] = 0;
            ++j;
        }
        if (j == n) {
            break;
        }
        ++sol.genes[j];
    }
    return best;
}

inline auto exhaustive_optimum(Instance const& inst, ConfidenceLevel const& conf) -> BaselineOptimum
{
    return exhaustive_optimum(inst, conf, inst.capacities);
}

/// Depth-first branch and bound over items in profit/mean-weight order.
///
/// A node assigns the next item to each knapsack whose chance constraint
/// still holds, then leaves it out. The bound relaxes the remaining items
/// into the summed residual chance capacity by mean weight alone (fractional
/// knapsack), which never underestimates what is still attainable since
/// adding an item raises a chance weight by at least its mean. Empty
/// knapsacks of equal capacity are interchangeable, so only the first one is
/// branched on. Returns the incumbent with a relative gap against the root
/// bound if the time limit is hit.
inline auto branch_and_bound_optimum(Instance const& inst, ConfidenceLevel const& conf,
                                     std::span<double const> capacities,
                                     std::chrono::duration<double> time_limit = std::chrono::seconds(60))
    -> BaselineOptimum
{
    auto const n = inst.item_count();
    auto const m = inst.knapsack_count();
    auto const k_alpha = conf.k_alpha();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto const& x = inst.items[a];
        auto const& y = inst.items[b];
        return static_cast<double>(x.profit) * static_cast<double>(y.mean_weight) >
               static_cast<double>(y.profit) * static_cast<double>(x.mean_weight);
    });

    std::vector<double> mean_sum(m, 0.0);
    std::vector<double> var_sum(m, 0.0);
    std::vector<std::size_t> count(m, 0);
    Solution current(n);
    Solution incumbent(n);
    std::int64_t best = 0;
    std::int64_t profit = 0;

    auto residual_total = [&] {
        double r = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            auto const cw = chance_weight(mean_sum[i], var_sum[i], conf);
            r += std::max(0.0, capacities[i] - cw);
        }
        return r;
    };
    auto bound_from = [&](std::size_t depth) {
        auto cap = residual_total();
        auto ub = static_cast<double>(profit);
        for (auto d = depth; d < n && cap > 0.0; ++d) {
            auto const& it = inst.items[order[d]];
            auto const w = static_cast<double>(it.mean_weight);
            if (w <= cap) {
                cap -= w;
                ub += static_cast<double>(it.profit);
            } else {
                ub += static_cast<double>(it.profit) * cap / w;
                cap = 0.0;
            }
        }
        return ub;
    };

    auto const root_bound = bound_from(0);
    auto const start = std::chrono::steady_clock::now();
    std::uint64_t nodes = 0;
    bool timed_out = false;

    auto search = [&](auto&& self, std::size_t depth) -> void {
        if (timed_out) {
            return;
        }
        if ((++nodes & 1023U) == 0 && std::chrono::steady_clock::now() - start > time_limit) {
            timed_out = true;
            return;
        }
        if (profit > best) {
            best = profit;
            incumbent = current;
        }
        if (depth == n) {
            return;
        }
        if (std::floor(bound_from(depth) + 1e-9) <= static_cast<double>(best)) {
            return;
        }
        auto const j = order[depth];
        auto const& item = inst.items[j];
        auto const mu = static_cast<double>(item.mean_weight);
        for (std::size_t i = 0; i < m; ++i) {
            if (count[i] == 0) {
                bool duplicate = false;
                for (std::size_t e = 0; e < i; ++e) {
                    if (count[e] == 0 && capacities[e] == capacities[i]) {
                        duplicate = true;
                        break;
                    }
                }
                if (duplicate) {
                    continue;
                }
            }
            auto const new_mean = mean_sum[i] + mu;
            auto const new_var = var_sum[i] + item.variance;
            if (new_mean + k_alpha * std::sqrt(new_var) > capacities[i]) {
                continue;
            }
            auto const old_mean = mean_sum[i];
            auto const old_var = var_sum[i];
            mean_sum[i] = new_mean;
            var_sum[i] = new_var;
            ++count[i];
            profit += item.profit;
            current.genes[j] = static_cast<Gene>(i + 1);
            self(self, depth + 1);
            current.genes[j] = 0;
            profit -= item.profit;
            --count[i];
            mean_sum[i] = old_mean;
            var_sum[i] = old_var;
            if (timed_out) {
                return;
            }
        }
        self(self, depth + 1);
    };
    search(search, 0);

    BaselineOptimum out;
    out.instance_id = instance_id(inst);
    out.profit = best;
    out.method = BaselineMethod::EXACT_BB;
    out.solution = incumbent;
    if (timed_out) {
        auto const ub = std::max(std::floor(root_bound + 1e-9), static_cast<double>(best));
        out.gap = ub > 0.0 ? (ub - static_cast<double>(best)) / ub : 0.0;
    }
    return out;
}

inline auto branch_and_bound_optimum(Instance const& inst, ConfidenceLevel const& conf,
                                     std::chrono::duration<double> time_limit = std::chrono::seconds(60))
    -> BaselineOptimum
{
    return branch_and_bound_optimum(inst, conf, inst.capacities, time_limit);
}

/// Greedy lower bound: items by profit per chance-weight increment into an
/// empty knapsack, each placed into the first knapsack (by descending residual
/// chance capacity) that still satisfies its chance constraint.
inline auto greedy_baseline(Instance const& inst, ConfidenceLevel const& conf, std::span<double const> capacities)
    -> BaselineOptimum
{
    auto const n = inst.item_count();
    auto const m = inst.knapsack_count();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto density = [&](std::size_t j) {
        auto const& it = inst.items[j];
        return static_cast<double>(it.profit) /
               (static_cast<double>(it.mean_weight) + conf.k_alpha() * std::sqrt(it.variance));
    };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return density(a) > density(b); });

    std::vector<double> mean_sum(m, 0.0);
    std::vector<double> var_sum(m, 0.0);
    std::vector<std::size_t> ks(m);
    Solution sol(n);
    std::int64_t profit = 0;
    for (auto j : order) {
        auto const& item = inst.items[j];
        std::iota(ks.begin(), ks.end(), std::size_t{0});
        auto residual = [&](std::size_t i) { return capacities[i] - chance_weight(mean_sum[i], var_sum[i], conf); };
        std::stable_sort(ks.begin(), ks.end(), [&](std::size_t a, std::size_t b) { return residual(a) > residual(b); });
        for (auto i : ks) {
            auto const nm = mean_sum[i] + static_cast<double>(item.mean_weight);
            auto const nv = var_sum[i] + item.variance;
            if (chance_weight(nm, nv, conf) <= capacities[i]) {
                mean_sum[i] = nm;
                var_sum[i] = nv;
                sol.genes[j] = static_cast<Gene>(i + 1);
                profit += item.profit;
                break;
            }
        }
    }
    // Accumulation order differs from knapsack_loads; drop items until the
    // canonical evaluation agrees (a no-op except at exact ties).
    while (!detail::is_chance_feasible(inst, sol, conf, capacities)) {
        auto it = std::find_if(order.rbegin(), order.rend(), [&](std::size_t j) { return sol.genes[j] != 0; });
        sol.genes[*it] = 0;
        profit -= inst.items[*it].profit;
    }
    return BaselineOptimum{instance_id(inst), profit, BaselineMethod::GREEDY_LB, 0.0, sol};
}

inline auto greedy_baseline(Instance const& inst, ConfidenceLevel const& conf) -> BaselineOptimum
{
    return greedy_baseline(inst, conf, inst.capacities);
}

// ---------------------------------------------------------------------------
// baseline file: one `<instance_id> <profit> <method> <gap>` per line, '#' comments

inline auto read_baselines(std::istream& in) -> std::vector<BaselineOptimum>
{
    std::vector<BaselineOptimum> out;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto const t = detail::trim(raw);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        auto tok = detail::split_ws(t);
        if (tok.size() != 4) {
            throw FormatError("baseline line " + std::to_string(lineno) +
                              ": expected '<instance_id> <profit> <method> <gap>'");
        }
        BaselineOptimum b;
        b.instance_id = std::string(tok[0]);
        b.profit = detail::parse_number<std::int64_t>(tok[1], "profit", lineno);
        auto method = parse_baseline_method(tok[2]);
        if (!method) {
            throw FormatError("baseline line " + std::to_string(lineno) + ": unknown method '" + std::string(tok[2]) +
                              "'");
        }
        b.method = *method;
        b.gap = detail::parse_number<double>(tok[3], "gap", lineno);
        if (b.gap < 0.0) {
            throw FormatError("baseline line " + std::to_string(lineno) + ": negative gap");
        }
        out.push_back(std::move(b));
    }
    return out;
}

inline auto read_baselines(std::filesystem::path const& path) -> std::vector<BaselineOptimum>
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return read_baselines(in);
}

inline void write_baselines(std::span<BaselineOptimum const> rows, std::ostream& out)
{
    for (auto const& b : rows) {
        out << b.instance_id << ' ' << b.profit << ' ' << to_string(b.method) << ' ' << detail::format_real(b.gap)
            << '\n';
    }
}

} // namespace dccmkp
