#pragma once

#include <atomic>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "dccmkp/encoding.hpp"
#include "dccmkp/instance.hpp"
#include "dccmkp/stochastic.hpp"

namespace dccmkp {

// f1 is maximized, f2 minimized. Feasible: (profit, sum of chance weights).
// Infeasible: (-violation, M + violation) with M the current total capacity.
struct Fitness {
    double f1 = 0.0;
    double f2 = 0.0;
    bool feasible = true;
    double violation = 0.0;
    std::int64_t profit = 0;
    double chance_weight_sum = 0.0;

    friend auto operator==(Fitness const&, Fitness const&) -> bool = default;
};

class EvaluationCounter {
public:
    void increment(std::uint64_t by = 1) noexcept { count_.fetch_add(by, std::memory_order_relaxed); }
    [[nodiscard]] auto value() const noexcept -> std::uint64_t { return count_.load(std::memory_order_relaxed); }
    void reset() noexcept { count_.store(0, std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> count_{0};
};

inline auto penalty_constant(std::span<double const> capacities) noexcept -> double
{
    return std::accumulate(capacities.begin(), capacities.end(), 0.0);
}

inline auto fitness_from_loads(Instance const& inst, Solution const& sol, std::span<KnapsackLoad const> loads,
                               std::span<double const> capacities) -> Fitness
{
    Fitness fit;
    fit.violation = violation(loads, capacities);
    fit.feasible = fit.violation == 0.0;
    for (std::size_t j = 0; j < sol.size(); ++j) {
        if (sol.genes[j] != 0) {
            fit.profit += inst.items[j].profit;
        }
    }
    for (auto const& l : loads) {
        fit.chance_weight_sum += l.chance_weight;
    }
    if (fit.feasible) {
        fit.f1 = static_cast<double>(fit.profit);
        fit.f2 = fit.chance_weight_sum;
    } else {
        fit.f1 = -fit.violation;
        fit.f2 = penalty_constant(capacities) + fit.violation;
    }
    return fit;
}

inline auto evaluate(Instance const& inst, Solution const& sol, ConfidenceLevel const& conf,
                     std::span<double const> capacities_now, EvaluationCounter& counter) -> Fitness
{
    if (capacities_now.size() != inst.knapsack_count()) {
        throw EncodingError("capacity vector length differs from m");
    }
    auto loads = knapsack_loads(inst, sol, conf);
    auto fit = fitness_from_loads(inst, sol, loads, capacities_now);
    counter.increment();
    return fit;
}

/// Evaluation context of one run: instance, confidence level, the capacities
/// in force, and the shared evaluation counter. Keeps a scratch buffer, so a
/// single Evaluator must not be shared between threads.
class Evaluator {
public:
    Evaluator(Instance const& inst, ConfidenceLevel conf, EvaluationCounter& counter)
        : inst_(&inst), conf_(conf), counter_(&counter), capacities_(inst.capacities),
          scratch_(inst.knapsack_count())
    {
    }

    auto operator()(Solution const& sol) -> Fitness { return evaluate(sol, true); }

    // `counted = false` leaves the evaluation counter untouched.
    auto evaluate(Solution const& sol, bool counted) -> Fitness
    {
        knapsack_loads_into(*inst_, sol, conf_, scratch_);
        auto fit = fitness_from_loads(*inst_, sol, scratch_, capacities_);
        if (counted) {
            counter_->increment();
        }
        return fit;
    }

    void set_capacities(std::span<double const> caps)
    {
        if (caps.size() != inst_->knapsack_count()) {
            throw EncodingError("capacity vector length differs from m");
        }
        capacities_.assign(caps.begin(), caps.end());
    }

    [[nodiscard]] auto capacities() const noexcept -> std::span<double const> { return capacities_; }
    [[nodiscard]] auto instance() const noexcept -> Instance const& { return *inst_; }
    [[nodiscard]] auto confidence() const noexcept -> ConfidenceLevel const& { return conf_; }
    [[nodiscard]] auto evaluations() const noexcept -> std::uint64_t { return counter_->value(); }

private:
    Instance const* inst_;
    ConfidenceLevel conf_;
    EvaluationCounter* counter_;
    std::vector<double> capacities_;
    std::vector<KnapsackLoad> scratch_;
};

inline auto dominates(Fitness const& a, Fitness const& b) noexcept -> bool
{
    return a.f1 >= b.f1 && a.f2 <= b.f2 && (a.f1 > b.f1 || a.f2 < b.f2);
}

} // namespace dccmkp
