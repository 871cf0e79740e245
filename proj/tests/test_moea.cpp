#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "dccmkp/moea.hpp"
#include "dccmkp/oracle.hpp"
#include "oracles.hpp"

using namespace dccmkp;

namespace {

constexpr std::array kAll{AlgorithmKind::MOEAD, AlgorithmKind::NSGA2, AlgorithmKind::NSGA3, AlgorithmKind::SPEA2};

auto small_config(AlgorithmKind kind, std::uint64_t budget, std::uint64_t seed) -> AlgorithmConfig
{
    AlgorithmConfig cfg;
    cfg.algorithm = kind;
    cfg.population_size = 20;
    cfg.budget_evaluations = budget;
    cfg.seed = seed;
    return cfg;
}

auto medium_instance() -> Instance
{
    return generate(SetLabel::CUSTOM, 30, 3, Correlation::STRONG, VarianceRegime::V1, 17);
}

} // namespace

TEST(Run, BudgetOfOnePopulation)
{
    auto const inst = medium_instance();
    ConfidenceLevel const conf(0.99);
    for (auto kind : kAll) {
        auto const cfg = small_config(kind, 20, 5);
        auto const rec = run(inst, conf, cfg);
        EXPECT_EQ(rec.evaluations, 20U);
        ASSERT_EQ(rec.snapshots.size(), 1U);

        // every front member comes from the initial sample
        auto rng = Stream(5).substream("init");
        std::set<std::vector<Gene>> initial;
        for (int i = 0; i < 20; ++i) {
            initial.insert(random_solution(30, 3, rng).genes);
        }
        for (auto const& e : rec.final_front) {
            EXPECT_TRUE(initial.count(e.genes)) << to_string(kind);
        }
    }
}

TEST(Run, BudgetBelowPopulation)
{
    auto const inst = medium_instance();
    EXPECT_THROW(run(inst, ConfidenceLevel(0.99), small_config(AlgorithmKind::NSGA2, 19, 1)), ConfigError);
}

TEST(Run, Deterministic)
{
    auto const inst = medium_instance();
    ConfidenceLevel const conf(0.999);
    for (auto kind : kAll) {
        auto const cfg = small_config(kind, 3000, 11);
        EXPECT_EQ(run(inst, conf, cfg), run(inst, conf, cfg)) << to_string(kind);
        EXPECT_EQ(nlohmann::json(run(inst, conf, cfg)).dump(), nlohmann::json(run(inst, conf, cfg)).dump());
    }
}

TEST(Run, CounterStopsWithinOneBatch)
{
    auto const inst = medium_instance();
    ConfidenceLevel const conf(0.99);
    for (auto kind : kAll) {
        for (std::uint64_t budget : {20U, 21U, 39U, 40U, 41U, 1234U}) {
            auto const rec = run(inst, conf, small_config(kind, budget, 3));
            EXPECT_GE(rec.evaluations, budget);
            EXPECT_LT(rec.evaluations, budget + 20);
        }
    }
}

TEST(Run, FinalFrontIsFeasibleAndNondominated)
{
    auto const inst = medium_instance();
    ConfidenceLevel const conf(0.99);
    for (auto kind : kAll) {
        auto const rec = run(inst, conf, small_config(kind, 20000, 8));
        ASSERT_FALSE(rec.final_front.empty());
        for (auto const& e : rec.final_front) {
            Solution const s(e.genes);
            auto const w = oracle::chance_weights(inst, e.genes, oracle::quantile(0.99));
            double sum = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                ASSERT_LE(w[i], inst.capacities[i]);
                sum += w[i];
            }
            ASSERT_NEAR(e.chance_weight_sum, sum, 1e-9);
            for (auto const& o : rec.final_front) {
                ASSERT_FALSE(oracle::max_min_dominates(Fitness{static_cast<double>(o.profit), o.chance_weight_sum},
                                                       Fitness{static_cast<double>(e.profit), e.chance_weight_sum}));
            }
        }
    }
}

TEST(Run, TinyInstanceReachesOptimum)
{
    // brute force over all 3^6 assignments
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto const inst = generate(SetLabel::CUSTOM, 6, 2, Correlation::STRONG, VarianceRegime::V1, seed);
        ConfidenceLevel const conf(0.99);
        auto const best = oracle::brute_force_optimum(inst, inst.capacities, oracle::quantile(0.99));
        auto cfg = small_config(AlgorithmKind::NSGA2, 100000, seed);
        cfg.population_size = 100;
        auto const rec = run(inst, conf, cfg);
        std::int64_t found = 0;
        for (auto const& e : rec.final_front) {
            found = std::max(found, e.profit);
        }
        EXPECT_EQ(found, best) << "instance seed " << seed;
    }
}

TEST(Moead, IdealNeverRisesWithinPeriod)
{
    auto const inst = medium_instance();
    EvaluationCounter counter;
    Evaluator eval(inst, ConfidenceLevel(0.99), counter);
    auto cfg = small_config(AlgorithmKind::MOEAD, 1000000, 2);
    VariationConfig var;
    var.mutation_prob = 1.0 / 30.0;
    Moead algo(eval, cfg, var, Stream(2));
    Stream init(3);
    std::vector<Individual> pop;
    for (int i = 0; i < 20; ++i) {
        auto s = random_solution(30, 3, init);
        pop.push_back(Individual{s, eval(s)});
    }
    algo.initialize(pop);
    ASSERT_EQ(algo.weights().size(), 20U);
    auto prev = algo.ideal();
    for (int g = 0; g < 200; ++g) {
        algo.generation();
        auto const now = algo.ideal();
        ASSERT_LE(now[0], prev[0]);
        ASSERT_LE(now[1], prev[1]);
        for (auto const& ind : algo.population()) {
            auto const gm = to_minimization(ind.fitness);
            ASSERT_GE(gm[0], now[0]);
            ASSERT_GE(gm[1], now[1]);
        }
        prev = now;
    }
    EXPECT_EQ(counter.value(), 20U + 200U * 20U);

    // a change resets the ideal point to the re-evaluated population
    std::vector<double> caps(inst.capacities.begin(), inst.capacities.end());
    for (auto& c : caps) {
        c *= 0.5;
    }
    eval.set_capacities(caps);
    algo.reevaluate(true);
    algo.environment_changed();
    Objectives expect{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (auto const& ind : algo.population()) {
        auto const gm = to_minimization(ind.fitness);
        expect[0] = std::min(expect[0], gm[0]);
        expect[1] = std::min(expect[1], gm[1]);
    }
    EXPECT_EQ(algo.ideal(), expect);
}

TEST(Optimizer, ReevaluationCounting)
{
    auto const inst = medium_instance();
    EvaluationCounter counter;
    Evaluator eval(inst, ConfidenceLevel(0.99), counter);
    Nsga2 algo(eval, small_config(AlgorithmKind::NSGA2, 1000, 1), VariationConfig{}, Stream(1));
    Stream init(4);
    std::vector<Individual> pop;
    for (int i = 0; i < 20; ++i) {
        auto s = random_solution(30, 3, init);
        pop.push_back(Individual{s, eval(s)});
    }
    algo.initialize(pop);
    auto const before = counter.value();
    algo.reevaluate(false);
    EXPECT_EQ(counter.value(), before);
    algo.reevaluate(true);
    EXPECT_EQ(counter.value(), before + 20);
}

TEST(Nsga2Selection, KeepsFirstFront)
{
    Stream rng(6);
    for (int t = 0; t < 500; ++t) {
        auto const n = static_cast<std::size_t>(rng.uniform_int(2, 40));
        std::vector<Fitness> pool(2 * n);
        for (auto& f : pool) {
            f = Fitness{static_cast<double>(rng.uniform_int(0, 30)), static_cast<double>(rng.uniform_int(0, 30))};
        }
        auto const sel = nsga2_environmental_selection(pool, n);
        ASSERT_EQ(sel.survivors.size(), n);
        auto const fronts = oracle::peel_fronts(pool);
        if (fronts[0].size() <= n) {
            for (auto i : fronts[0]) {
                ASSERT_NE(std::find(sel.survivors.begin(), sel.survivors.end(), i), sel.survivors.end());
            }
        }
        ASSERT_TRUE(std::is_sorted(sel.rank.begin(), sel.rank.end()));
    }
}

TEST(Feasibility, LargerCapacitiesKeepFeasibleSolutions)
{
    auto const inst = medium_instance();
    ConfidenceLevel const conf(1.0 - 1e-4);
    Stream rng(7);
    std::vector<double> wider(inst.capacities.begin(), inst.capacities.end());
    for (auto& c : wider) {
        c += 37.5;
    }
    for (int t = 0; t < 3000; ++t) {
        auto s = random_solution(30, 3, rng);
        for (auto& g : s.genes) {
            g = rng.bernoulli(0.3) ? g : 0;
        }
        if (detail::is_chance_feasible(inst, s, conf, inst.capacities)) {
            ASSERT_TRUE(detail::is_chance_feasible(inst, s, conf, wider));
        }
    }
}

TEST(DynamicRun, SnapshotPerChangePlusFinal)
{
    auto const inst = medium_instance();
    ConfidenceLevel const conf(0.99);
    ScheduleParams p;
    p.num_changes = 10;
    p.budget_evaluations = 12000;
    p.warmup_evaluations = 2000;
    p.seed = 99;
    DynamicSchedule const sched(inst.capacities, p);
    for (auto kind : kAll) {
        auto cfg = small_config(kind, p.budget_evaluations, 4);
        std::vector<Snapshot> seen;
        auto const rec = run(inst, conf, cfg, &sched, [&](Snapshot const& s) { seen.push_back(s); });
        ASSERT_EQ(rec.snapshots.size(), 11U) << to_string(kind);
        EXPECT_EQ(seen, rec.snapshots);
        EXPECT_TRUE(rec.dynamic);
        EXPECT_EQ(rec.change_log.size(), 10U);
        for (std::size_t k = 0; k < 10; ++k) {
            auto const& s = rec.snapshots[k];
            EXPECT_EQ(s.period, k);
            // taken under the capacities of the period that is ending
            auto const expect = k == 0 ? inst.capacities : sched.change_log()[k - 1].new_capacities;
            EXPECT_EQ(s.capacities, expect);
            EXPECT_GE(s.evaluation_count, sched.change_log()[k].at_evaluation);
            EXPECT_LT(s.evaluation_count, sched.change_log()[k].at_evaluation + 20);
        }
        EXPECT_EQ(rec.snapshots.back().period, 10U);
        EXPECT_GE(rec.evaluations, p.budget_evaluations);
        EXPECT_LT(rec.evaluations, p.budget_evaluations + 20);
    }
}

TEST(DynamicRun, RejectsShortInterval)
{
    auto const inst = medium_instance();
    ScheduleParams p;
    p.num_changes = 100;
    p.budget_evaluations = 5000;
    p.warmup_evaluations = 2000;
    DynamicSchedule const sched(inst.capacities, p);
    EXPECT_THROW(run(inst, ConfidenceLevel(0.99), small_config(AlgorithmKind::MOEAD, 5000, 1), &sched),
                 ConfigError);
}
