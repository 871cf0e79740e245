#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dccmkp/error.hpp"
#include "dccmkp/rng.hpp"

namespace dccmkp {

struct ChangeEvent {
    std::uint64_t at_evaluation = 0;
    std::vector<std::size_t> selected; // 0-based knapsack indices, ascending
    std::map<std::size_t, double> multipliers;
    std::vector<double> new_capacities;

    friend auto operator==(ChangeEvent const&, ChangeEvent const&) -> bool = default;
};

struct ScheduleParams {
    double eta = 0.2;
    std::size_t num_changes = 20;
    std::uint64_t budget_evaluations = 10'000'000;
    std::uint64_t warmup_evaluations = 1'000'000;
    std::uint64_t seed = 0;
};

/// Capacity schedule with all change events drawn up front.
///
/// Change k (k = 0, ..., num_changes - 1) fires at warmup + k * tau with
/// tau = (budget - warmup) / num_changes. At every change each knapsack is
/// independently selected with probability 1/2 (an empty draw is redrawn);
/// selected knapsacks get r * B0 with r ~ U[1 - eta, 1 + eta], the rest are
/// reset to B0.
class DynamicSchedule {
public:
    DynamicSchedule(std::vector<double> base_capacities, ScheduleParams const& params)
        : base_(std::move(base_capacities)), eta_(params.eta), num_changes_(params.num_changes),
          warmup_(params.warmup_evaluations), seed_(params.seed)
    {
        if (base_.empty()) {
            throw ConfigError("schedule needs at least one knapsack");
        }
        if (!(eta_ > 0.0 && eta_ < 1.0)) {
            throw ConfigError("eta must lie in (0, 1)");
        }
        if (num_changes_ == 0) {
            throw ConfigError("a dynamic schedule needs at least one change");
        }
        if (params.budget_evaluations <= warmup_) {
            throw ConfigError("budget must exceed the warm-up");
        }
        tau_ = (params.budget_evaluations - warmup_) / num_changes_;
        if (tau_ == 0) {
            throw ConfigError("too many changes for the post-warm-up budget");
        }

        Stream const root(seed_);
        auto const m = base_.size();
        change_log_.reserve(num_changes_);
        for (std::size_t k = 0; k < num_changes_; ++k) {
            auto rng = root.substream("change", k);
            ChangeEvent ev;
            ev.at_evaluation = warmup_ + k * tau_;
            do {
                ev.selected.clear();
                for (std::size_t i = 0; i < m; ++i) {
                    if (rng.bernoulli(0.5)) {
                        ev.selected.push_back(i);
                    }
                }
            } while (ev.selected.empty());
            ev.new_capacities = base_;
            for (auto i : ev.selected) {
                auto const r = rng.uniform(1.0 - eta_, 1.0 + eta_);
                ev.multipliers.emplace(i, r);
                ev.new_capacities[i] = r * base_[i];
            }
            change_log_.push_back(std::move(ev));
        }
    }

    [[nodiscard]] auto base_capacities() const noexcept -> std::span<double const> { return base_; }
    [[nodiscard]] auto eta() const noexcept -> double { return eta_; }
    [[nodiscard]] auto num_changes() const noexcept -> std::size_t { return num_changes_; }
    [[nodiscard]] auto tau_evaluations() const noexcept -> std::uint64_t { return tau_; }
    [[nodiscard]] auto warmup_evaluations() const noexcept -> std::uint64_t { return warmup_; }
    [[nodiscard]] auto seed() const noexcept -> std::uint64_t { return seed_; }
    [[nodiscard]] auto change_log() const noexcept -> std::span<ChangeEvent const> { return change_log_; }

    // Number of change boundaries at or before the given evaluation count.
    [[nodiscard]] auto changes_before(std::uint64_t evaluation_count) const noexcept -> std::size_t
    {
        if (evaluation_count < warmup_) {
            return 0;
        }
        auto const k = (evaluation_count - warmup_) / tau_ + 1;
        return k < num_changes_ ? static_cast<std::size_t>(k) : num_changes_;
    }

    [[nodiscard]] auto capacities_at(std::uint64_t evaluation_count) const -> std::vector<double>
    {
        auto const k = changes_before(evaluation_count);
        return k == 0 ? base_ : change_log_[k - 1].new_capacities;
    }

private:
    std::vector<double> base_;
    double eta_;
    std::size_t num_changes_;
    std::uint64_t warmup_;
    std::uint64_t seed_;
    std::uint64_t tau_ = 0;
    std::vector<ChangeEvent> change_log_;
};

// ---------------------------------------------------------------------------
// adaptive mutation rate

enum class DamrsPolicy {
    single_doubling, // double once per change, as written
    compounding,     // keep doubling every generation without feasible members (capped at 1)
};

struct DamrsState {
    double p_m_initial = 0.01;
    double p_m_current = 0.01;
    std::size_t threshold = 30;
    bool is_adapt = false;

    friend auto operator==(DamrsState const&, DamrsState const&) -> bool = default;
};

inline auto make_damrs(double p_m_initial, std::size_t population_size) -> DamrsState
{
    return DamrsState{p_m_initial, p_m_initial, static_cast<std::size_t>(0.3 * static_cast<double>(population_size)),
                      false};
}

/// One pass of the adaptive mutation loop body, taken once per generation
/// after the population has been re-evaluated.
inline auto damrs_step(DamrsState state, bool changed, std::size_t feasible_count,
                       DamrsPolicy policy = DamrsPolicy::single_doubling) -> DamrsState
{
    if (changed) {
        state.p_m_current = state.p_m_initial;
        state.is_adapt = false;
        if (feasible_count == 0) {
            state.is_adapt = true;
            state.p_m_current = 2.0 * state.p_m_current;
        }
    } else if (policy == DamrsPolicy::compounding && state.is_adapt && feasible_count == 0) {
        state.p_m_current = std::min(1.0, 2.0 * state.p_m_current);
    }
    if (state.is_adapt && feasible_count >= state.threshold) {
        state.p_m_current = state.p_m_initial;
        state.is_adapt = false;
    }
    return state;
}

} // namespace dccmkp
