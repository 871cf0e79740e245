#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dccmkp/dynamics.hpp"
#include "dccmkp/encoding.hpp"
#include "dccmkp/error.hpp"
#include "dccmkp/instance.hpp"
#include "dccmkp/objectives.hpp"
#include "dccmkp/pareto.hpp"
#include "dccmkp/rng.hpp"
#include "dccmkp/run_record.hpp"
#include "dccmkp/stochastic.hpp"

namespace dccmkp {

struct Individual {
    Solution solution;
    Fitness fitness;
    bool stale = false;
};

struct AlgorithmConfig {
    AlgorithmKind algorithm = AlgorithmKind::MOEAD;
    std::size_t population_size = 100;
    std::uint64_t budget_evaluations = 10'000'000;
    double moead_neighborhood_fraction = 0.1;
    std::size_t moead_replacement_limit = 1;
    double moead_neighbor_selection_prob = 1.0;
    std::size_t nsga3_reference_count = 100;
    std::size_t spea2_archive_size = 0; // 0 selects population_size
    std::optional<double> initial_mutation_prob; // unset selects 1/n
    VariationConfig variation{};
    DamrsPolicy damrs_policy = DamrsPolicy::single_doubling;
    bool count_reevaluations = true;
    std::uint64_t seed = 0;
};

inline void validate(AlgorithmConfig const& cfg)
{
    if (cfg.population_size < 2) {
        throw ConfigError("population size must be at least 2");
    }
    if (cfg.budget_evaluations < cfg.population_size) {
        throw ConfigError("budget (" + std::to_string(cfg.budget_evaluations) +
                          ") is smaller than the population size (" + std::to_string(cfg.population_size) + ")");
    }
    if (cfg.moead_replacement_limit < 1) {
        throw ConfigError("MOEA/D replacement limit must be at least 1");
    }
    if (!(cfg.moead_neighborhood_fraction > 0.0 && cfg.moead_neighborhood_fraction <= 1.0)) {
        throw ConfigError("MOEA/D neighborhood fraction must lie in (0, 1]");
    }
    if (!(cfg.moead_neighbor_selection_prob >= 0.0 && cfg.moead_neighbor_selection_prob <= 1.0)) {
        throw ConfigError("MOEA/D neighbor selection probability must lie in [0, 1]");
    }
    if (cfg.nsga3_reference_count < 1) {
        throw ConfigError("NSGA-III needs at least one reference direction");
    }
    if (cfg.initial_mutation_prob && !(*cfg.initial_mutation_prob > 0.0 && *cfg.initial_mutation_prob <= 1.0)) {
        throw ConfigError("initial mutation probability must lie in (0, 1]");
    }
    validate(cfg.variation);
}

// ---------------------------------------------------------------------------
// shared substrate

class Optimizer {
public:
    Optimizer(Evaluator& evaluator, AlgorithmConfig const& cfg, VariationConfig variation, Stream rng)
        : evaluator_(&evaluator), cfg_(cfg), variation_(variation), rng_(rng)
    {
    }
    Optimizer(Optimizer const&) = delete;
    auto operator=(Optimizer const&) -> Optimizer& = delete;
    virtual ~Optimizer() = default;

    virtual void initialize(std::vector<Individual> population) { pop_ = std::move(population); }

    // Produce and evaluate one batch of offspring, then select survivors.
    virtual void generation() = 0;

    // Called after the population was re-evaluated under new capacities.
    virtual void environment_changed() {}

    void reevaluate(bool counted)
    {
        for (auto& ind : pop_) {
            ind.fitness = evaluator_->evaluate(ind.solution, counted);
            ind.stale = false;
        }
    }

    void mark_stale() noexcept
    {
        for (auto& ind : pop_) {
            ind.stale = true;
        }
    }

    [[nodiscard]] auto population() const noexcept -> std::span<Individual const> { return pop_; }
    [[nodiscard]] auto variation() noexcept -> VariationConfig& { return variation_; }

protected:
    auto evaluate(Solution s) -> Individual
    {
        Individual ind;
        ind.fitness = (*evaluator_)(s);
        ind.solution = std::move(s);
        return ind;
    }

    auto vary(Solution const& a, Solution const& b) -> std::pair<Solution, Solution>
    {
        auto const m = evaluator_->instance().knapsack_count();
        auto children = sbx_crossover(a, b, variation_, m, rng_);
        children.first = polynomial_mutation(std::move(children.first), variation_, m, rng_);
        children.second = polynomial_mutation(std::move(children.second), variation_, m, rng_);
        return children;
    }

    [[nodiscard]] auto fitnesses(std::span<Individual const> inds) const -> std::vector<Fitness>
    {
        std::vector<Fitness> out;
        out.reserve(inds.size());
        for (auto const& ind : inds) {
            out.push_back(ind.fitness);
        }
        return out;
    }

    Evaluator* evaluator_;
    AlgorithmConfig cfg_;
    VariationConfig variation_;
    Stream rng_;
    std::vector<Individual> pop_;
};

// ---------------------------------------------------------------------------
// MOEA/D

/// MOEA/D with Tchebycheff aggregation. One generation visits every
/// subproblem once (in a shuffled order), creates one child from two
/// neighborhood parents and lets it replace at most `moead_replacement_limit`
/// neighbors whose aggregated value it does not worsen.
class Moead final : public Optimizer {
public:
    using Optimizer::Optimizer;

    void initialize(std::vector<Individual> population) override
    {
        Optimizer::initialize(std::move(population));
        weights_ = make_weight_vectors(pop_.size(), cfg_.moead_neighborhood_fraction);
        reset_ideal();
    }

    void generation() override
    {
        auto const n = pop_.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng_.shuffle(order);
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::vector<std::size_t> pool;

        for (auto i : order) {
            auto const use_neighbors = rng_.bernoulli(cfg_.moead_neighbor_selection_prob);
            pool = use_neighbors ? weights_[i].neighbors : all;
            auto const a = pool[rng_.index(pool.size())];
            auto b = a;
            if (pool.size() > 1) {
                while (b == a) {
                    b = pool[rng_.index(pool.size())];
                }
            }
            auto children = vary(pop_[a].solution, pop_[b].solution);
            auto child = evaluate(std::move(children.first));
            update_ideal(child.fitness);

            auto const gc = to_minimization(child.fitness);
            rng_.shuffle(pool);
            std::size_t replaced = 0;
            for (auto k : pool) {
                auto const& lambda = weights_[k].lambda;
                if (tchebycheff(gc, lambda, ideal_) <= tchebycheff(pop_[k].fitness, lambda, ideal_)) {
                    pop_[k] = child;
                    if (++replaced >= cfg_.moead_replacement_limit) {
                        break;
                    }
                }
            }
        }
    }

    void environment_changed() override { reset_ideal(); }

    [[nodiscard]] auto ideal() const noexcept -> Objectives const& { return ideal_; }
    [[nodiscard]] auto weights() const noexcept -> std::span<WeightVector const> { return weights_; }

private:
    void reset_ideal()
    {
        ideal_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        for (auto const& ind : pop_) {
            update_ideal(ind.fitness);
        }
    }

    void update_ideal(Fitness const& fit) noexcept
    {
        auto const g = to_minimization(fit);
        ideal_[0] = std::min(ideal_[0], g[0]);
        ideal_[1] = std::min(ideal_[1], g[1]);
    }

    std::vector<WeightVector> weights_;
    Objectives ideal_{};
};

// ---------------------------------------------------------------------------
// NSGA-II

struct RankedSelection {
    std::vector<std::size_t> survivors;
    std::vector<std::size_t> rank;     // per survivor
    std::vector<double> crowding;      // per survivor
};

/// Elitist survival of NSGA-II: whole fronts while they fit, then the split
/// front by descending crowding distance (stable in index order).
inline auto nsga2_environmental_selection(std::span<Fitness const> pool, std::size_t count) -> RankedSelection
{
    RankedSelection out;
    auto const fronts = fast_nondominated_sort(pool);
    for (std::size_t r = 0; r < fronts.size() && out.survivors.size() < count; ++r) {
        auto const& front = fronts[r];
        std::vector<Fitness> members;
        members.reserve(front.size());
        for (auto i : front) {
            members.push_back(pool[i]);
        }
        auto const cd = crowding_distance(members);
        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (out.survivors.size() + front.size() > count) {
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
            order.resize(count - out.survivors.size());
        }
        for (auto k : order) {
            out.survivors.push_back(front[k]);
            out.rank.push_back(r);
            out.crowding.push_back(cd[k]);
        }
    }
    return out;
}

class Nsga2 final : public Optimizer {
public:
    using Optimizer::Optimizer;

    void initialize(std::vector<Individual> population) override
    {
        Optimizer::initialize(std::move(population));
        rerank();
    }

    void generation() override
    {
        auto const n = pop_.size();
        std::vector<Individual> pool = pop_;
        pool.reserve(2 * n);
        std::size_t produced = 0;
        while (produced < n) {
            auto const& p1 = pop_[tournament()];
            auto const& p2 = pop_[tournament()];
            auto children = vary(p1.solution, p2.solution);
            pool.push_back(evaluate(std::move(children.first)));
            ++produced;
            if (produced < n) {
                pool.push_back(evaluate(std::move(children.second)));
                ++produced;
            }
        }
        auto const sel = nsga2_environmental_selection(fitnesses(pool), n);
        std::vector<Individual> next;
        next.reserve(n);
        for (auto i : sel.survivors) {
            next.push_back(std::move(pool[i]));
        }
        pop_ = std::move(next);
        rank_ = sel.rank;
        crowding_ = sel.crowding;
    }

    void environment_changed() override { rerank(); }

private:
    void rerank()
    {
        auto const sel = nsga2_environmental_selection(fitnesses(pop_), pop_.size());
        std::vector<Individual> ordered;
        ordered.reserve(pop_.size());
        for (auto i : sel.survivors) {
            ordered.push_back(pop_[i]);
        }
        pop_ = std::move(ordered);
        rank_ = sel.rank;
        crowding_ = sel.crowding;
    }

    auto tournament() -> std::size_t
    {
        auto const a = rng_.index(pop_.size());
        auto const b = rng_.index(pop_.size());
        if (rank_[a] != rank_[b]) {
            return rank_[a] < rank_[b] ? a : b;
        }
        if (crowding_[a] != crowding_[b]) {
            return crowding_[a] > crowding_[b] ? a : b;
        }
        return rng_.bernoulli(0.5) ? a : b;
    }

    std::vector<std::size_t> rank_;
    std::vector<double> crowding_;
};

// ---------------------------------------------------------------------------
// NSGA-III

class Nsga3 final : public Optimizer {
public:
    Nsga3(Evaluator& evaluator, AlgorithmConfig const& cfg, VariationConfig variation, Stream rng)
        : Optimizer(evaluator, cfg, variation, rng), references_(das_dennis(cfg.nsga3_reference_count - 1))
    {
    }

    void generation() override
    {
        auto const n = pop_.size();
        std::vector<Individual> pool = pop_;
        pool.reserve(2 * n);
        std::size_t produced = 0;
        while (produced < n) {
            auto const& p1 = pop_[rng_.index(n)];
            auto const& p2 = pop_[rng_.index(n)];
            auto children = vary(p1.solution, p2.solution);
            pool.push_back(evaluate(std::move(children.first)));
            ++produced;
            if (produced < n) {
                pool.push_back(evaluate(std::move(children.second)));
                ++produced;
            }
        }
        auto const survivors = nsga3_environmental_selection(fitnesses(pool), n, references_, rng_);
        std::vector<Individual> next;
        next.reserve(n);
        for (auto i : survivors) {
            next.push_back(std::move(pool[i]));
        }
        pop_ = std::move(next);
    }

private:
    std::vector<Objectives> references_;
};

// ---------------------------------------------------------------------------
// SPEA2

/// SPEA2 with the archive as the persistent population: each generation
/// breeds N offspring from the archive by binary tournament on SPEA2 fitness
/// and selects the next archive from archive and offspring together.
class Spea2 final : public Optimizer {
public:
    using Optimizer::Optimizer;

    void initialize(std::vector<Individual> population) override
    {
        offspring_count_ = population.size();
        archive_size_ = cfg_.spea2_archive_size == 0 ? population.size() : cfg_.spea2_archive_size;
        pop_ = std::move(population);
        select(std::move(pop_));
    }

    void generation() override
    {
        std::vector<Individual> pool = pop_;
        pool.reserve(pop_.size() + offspring_count_);
        std::size_t produced = 0;
        while (produced < offspring_count_) {
            auto const& p1 = pop_[tournament()];
            auto const& p2 = pop_[tournament()];
            auto children = vary(p1.solution, p2.solution);
            pool.push_back(evaluate(std::move(children.first)));
            ++produced;
            if (produced < offspring_count_) {
                pool.push_back(evaluate(std::move(children.second)));
                ++produced;
            }
        }
        select(std::move(pool));
    }

    void environment_changed() override { fitness_ = spea2_fitness(fitnesses(pop_)); }

private:
    void select(std::vector<Individual> pool)
    {
        auto const fits = fitnesses(pool);
        auto const f = spea2_fitness(fits);
        auto const keep = spea2_environmental_selection(fits, f, archive_size_);
        std::vector<Individual> next;
        next.reserve(keep.size());
        fitness_.clear();
        for (auto i : keep) {
            next.push_back(std::move(pool[i]));
            fitness_.push_back(f[i]);
        }
        pop_ = std::move(next);
    }

    auto tournament() -> std::size_t
    {
        auto const a = rng_.index(pop_.size());
        auto const b = rng_.index(pop_.size());
        if (fitness_[a] != fitness_[b]) {
            return fitness_[a] < fitness_[b] ? a : b;
        }
        return rng_.bernoulli(0.5) ? a : b;
    }

    std::size_t offspring_count_ = 0;
    std::size_t archive_size_ = 0;
    std::vector<double> fitness_;
};

inline auto make_optimizer(Evaluator& evaluator, AlgorithmConfig const& cfg, VariationConfig variation, Stream rng)
    -> std::unique_ptr<Optimizer>
{
    switch (cfg.algorithm) {
    case AlgorithmKind::MOEAD: return std::make_unique<Moead>(evaluator, cfg, variation, rng);
    case AlgorithmKind::NSGA2: return std::make_unique<Nsga2>(evaluator, cfg, variation, rng);
    case AlgorithmKind::NSGA3: return std::make_unique<Nsga3>(evaluator, cfg, variation, rng);
    case AlgorithmKind::SPEA2: return std::make_unique<Spea2>(evaluator, cfg, variation, rng);
    }
    throw ConfigError("unknown algorithm");
}

// ---------------------------------------------------------------------------
// run driver

inline auto take_snapshot(std::span<Individual const> pop, std::uint64_t evaluations, std::size_t period,
                          std::span<double const> capacities) -> Snapshot
{
    Snapshot s;
    s.evaluation_count = evaluations;
    s.period = period;
    s.capacities.assign(capacities.begin(), capacities.end());
    s.min_violation = std::numeric_limits<double>::infinity();
    for (auto const& ind : pop) {
        if (ind.fitness.feasible) {
            ++s.feasible_count;
            if (!s.has_feasible || ind.fitness.profit > s.best_feasible_profit) {
                s.best_feasible_profit = ind.fitness.profit;
            }
            s.has_feasible = true;
        }
        s.min_violation = std::min(s.min_violation, ind.fitness.violation);
    }
    if (pop.empty()) {
        s.min_violation = 0.0;
    }
    return s;
}

inline auto feasible_front(std::span<Individual const> pop) -> std::vector<ArchiveEntry>
{
    std::vector<Fitness> fits;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (pop[i].fitness.feasible) {
            fits.push_back(pop[i].fitness);
            idx.push_back(i);
        }
    }
    std::vector<ArchiveEntry> out;
    if (fits.empty()) {
        return out;
    }
    auto const fronts = fast_nondominated_sort(fits);
    for (auto k : fronts.front()) {
        auto const& ind = pop[idx[k]];
        ArchiveEntry e{ind.fitness.profit, ind.fitness.chance_weight_sum, ind.solution.genes};
        if (std::find(out.begin(), out.end(), e) == out.end()) {
            out.push_back(std::move(e));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](ArchiveEntry const& a, ArchiveEntry const& b) {
        if (a.profit != b.profit) {
            return a.profit > b.profit;
        }
        return a.genes < b.genes;
    });
    return out;
}

inline auto config_digest(AlgorithmConfig const& cfg, double alpha, DynamicSchedule const* schedule) -> std::string
{
    std::ostringstream os;
    os.precision(17);
    os << to_string(cfg.algorithm) << '|' << cfg.population_size << '|' << cfg.budget_evaluations << '|'
       << cfg.moead_neighborhood_fraction << '|' << cfg.moead_replacement_limit << '|'
       << cfg.moead_neighbor_selection_prob << '|' << cfg.nsga3_reference_count << '|' << cfg.spea2_archive_size
       << '|' << (cfg.initial_mutation_prob ? *cfg.initial_mutation_prob : -1.0) << '|'
       << cfg.variation.crossover_prob << '|' << cfg.variation.mutation_distribution_index << '|'
       << cfg.variation.crossover_distribution_index << '|' << cfg.variation.crossover_gene_prob << '|'
       << static_cast<int>(cfg.damrs_policy) << '|' << cfg.count_reevaluations << '|' << cfg.seed << '|' << alpha;
    if (schedule != nullptr) {
        os << "|dyn|" << schedule->eta() << '|' << schedule->num_changes() << '|' << schedule->warmup_evaluations()
           << '|' << schedule->seed();
    }
    std::array<char, 17> hex{};
    std::snprintf(hex.data(), hex.size(), "%016llx", static_cast<unsigned long long>(detail::fnv1a(os.str())));
    return std::string(hex.data(), 16);
}

using SnapshotObserver = std::function<void(Snapshot const&)>;

/// Run one optimizer to its evaluation budget.
///
/// Before each generation the schedule (if any) is consulted: for every
/// change boundary crossed, a snapshot of the population is recorded under
/// the outgoing capacities, the new capacities are installed, the population
/// is re-evaluated and the adaptive mutation controller is stepped. A final
/// snapshot is taken at termination.
inline auto run(Instance const& inst, ConfidenceLevel const& conf, AlgorithmConfig const& cfg,
                DynamicSchedule const* schedule = nullptr, SnapshotObserver const& observer = {}) -> RunRecord
{
    validate(cfg);
    if (schedule != nullptr && schedule->base_capacities().size() != inst.knapsack_count()) {
        throw ConfigError("schedule and instance disagree on the number of knapsacks");
    }
    if (schedule != nullptr && schedule->tau_evaluations() < 2 * cfg.population_size) {
        throw ConfigError("change interval must be at least twice the population size");
    }

    EvaluationCounter counter;
    Evaluator evaluator(inst, conf, counter);
    if (schedule != nullptr) {
        evaluator.set_capacities(schedule->capacities_at(0));
    }

    auto const n = inst.item_count();
    auto const m = inst.knapsack_count();
    auto const p_init = cfg.initial_mutation_prob.value_or(1.0 / static_cast<double>(n));
    auto variation = cfg.variation;
    variation.mutation_prob = p_init;

    Stream const root(cfg.seed);
    auto init_rng = root.substream("init");
    auto optimizer = make_optimizer(evaluator, cfg, variation, root.substream("algorithm"));

    std::vector<Individual> initial;
    initial.reserve(cfg.population_size);
    for (std::size_t i = 0; i < cfg.population_size; ++i) {
        auto sol = random_solution(n, m, init_rng);
        Individual ind;
        ind.fitness = evaluator(sol);
        ind.solution = std::move(sol);
        initial.push_back(std::move(ind));
    }
    optimizer->initialize(std::move(initial));

    RunRecord record;
    record.seed = cfg.seed;
    record.config_digest = config_digest(cfg, conf.alpha(), schedule);
    record.algorithm = std::string(to_string(cfg.algorithm));
    record.alpha = conf.alpha();
    record.population_size = cfg.population_size;
    record.budget = cfg.budget_evaluations;
    record.dynamic = schedule != nullptr;
    if (schedule != nullptr) {
        record.num_changes = schedule->num_changes();
        record.change_log.assign(schedule->change_log().begin(), schedule->change_log().end());
    }

    auto emit = [&](Snapshot s) {
        if (observer) {
            observer(s);
        }
        record.snapshots.push_back(std::move(s));
    };

    auto damrs = make_damrs(p_init, cfg.population_size);
    std::size_t applied = 0;
    auto const budget = cfg.budget_evaluations;
    while (counter.value() < budget) {
        if (schedule != nullptr) {
            bool changed = false;
            auto const due = schedule->changes_before(counter.value());
            while (applied < due) {
                emit(take_snapshot(optimizer->population(), counter.value(), applied, evaluator.capacities()));
                evaluator.set_capacities(schedule->change_log()[applied].new_capacities);
                ++applied;
                changed = true;
            }
            if (changed) {
                optimizer->mark_stale();
                optimizer->reevaluate(cfg.count_reevaluations);
                optimizer->environment_changed();
            }
            std::size_t feasible = 0;
            for (auto const& ind : optimizer->population()) {
                feasible += ind.fitness.feasible ? 1U : 0U;
            }
            damrs = damrs_step(damrs, changed, feasible, cfg.damrs_policy);
            optimizer->variation().mutation_prob = damrs.p_m_current;
            if (counter.value() >= budget) {
                break;
            }
        }
        optimizer->generation();
    }

    emit(take_snapshot(optimizer->population(), counter.value(), applied, evaluator.capacities()));
    record.evaluations = counter.value();
    record.final_front = feasible_front(optimizer->population());
    return record;
}

} // namespace dccmkp
