#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dccmkp/dynamics.hpp"
#include "dccmkp/encoding.hpp"

namespace dccmkp {

enum class AlgorithmKind { MOEAD, NSGA2, NSGA3, SPEA2 };

inline auto to_string(AlgorithmKind a) -> std::string_view
{
    switch (a) {
    case AlgorithmKind::MOEAD: return "MOEAD";
    case AlgorithmKind::NSGA2: return "NSGA2";
    case AlgorithmKind::NSGA3: return "NSGA3";
    case AlgorithmKind::SPEA2: return "SPEA2";
    }
    return "MOEAD";
}

inline auto parse_algorithm(std::string_view s) -> std::optional<AlgorithmKind>
{
    if (s == "MOEAD" || s == "MOEA/D") { return AlgorithmKind::MOEAD; }
    if (s == "NSGA2" || s == "NSGA-II") { return AlgorithmKind::NSGA2; }
    if (s == "NSGA3" || s == "NSGA-III") { return AlgorithmKind::NSGA3; }
    if (s == "SPEA2") { return AlgorithmKind::SPEA2; }
    return std::nullopt;
}

// State of the population just before a capacity change (or at the end of the run).
struct Snapshot {
    std::uint64_t evaluation_count = 0;
    std::size_t period = 0; // number of changes applied so far
    bool has_feasible = false;
    std::int64_t best_feasible_profit = 0;
    double min_violation = 0.0; // over the population; 0 when a feasible member exists
    std::size_t feasible_count = 0;
    std::vector<double> capacities;

    friend auto operator==(Snapshot const&, Snapshot const&) -> bool = default;
};

struct ArchiveEntry {
    std::int64_t profit = 0;
    double chance_weight_sum = 0.0;
    std::vector<Gene> genes;

    friend auto operator==(ArchiveEntry const&, ArchiveEntry const&) -> bool = default;
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::string algorithm;
    double alpha = 0.0;
    std::size_t population_size = 0;
    std::uint64_t budget = 0;
    std::uint64_t evaluations = 0;
    bool dynamic = false;
    std::size_t num_changes = 0;
    std::vector<Snapshot> snapshots;
    std::vector<ArchiveEntry> final_front; // feasible non-dominated members at termination
    std::vector<ChangeEvent> change_log;

    friend auto operator==(RunRecord const&, RunRecord const&) -> bool = default;
};

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, ChangeEvent const& ev)
{
    nlohmann::json mult = nlohmann::json::object();
    for (auto const& [k, v] : ev.multipliers) {
        mult[std::to_string(k)] = v;
    }
    j = nlohmann::json{{"at_evaluation", ev.at_evaluation},
                       {"selected", ev.selected},
                       {"multipliers", mult},
                       {"new_capacities", ev.new_capacities}};
}

inline void from_json(nlohmann::json const& j, ChangeEvent& ev)
{
    j.at("at_evaluation").get_to(ev.at_evaluation);
    j.at("selected").get_to(ev.selected);
    j.at("new_capacities").get_to(ev.new_capacities);
    ev.multipliers.clear();
    for (auto const& [k, v] : j.at("multipliers").items()) {
        ev.multipliers.emplace(static_cast<std::size_t>(std::stoull(k)), v.get<double>());
    }
}

inline void to_json(nlohmann::json& j, Snapshot const& s)
{
    j = nlohmann::json{{"evaluation_count", s.evaluation_count},
                       {"period", s.period},
                       {"has_feasible", s.has_feasible},
                       {"best_feasible_profit", s.best_feasible_profit},
                       {"min_violation", s.min_violation},
                       {"feasible_count", s.feasible_count},
                       {"capacities", s.capacities}};
}

inline void from_json(nlohmann::json const& j, Snapshot& s)
{
    j.at("evaluation_count").get_to(s.evaluation_count);
    j.at("period").get_to(s.period);
    j.at("has_feasible").get_to(s.has_feasible);
    j.at("best_feasible_profit").get_to(s.best_feasible_profit);
    j.at("min_violation").get_to(s.min_violation);
    j.at("feasible_count").get_to(s.feasible_count);
    j.at("capacities").get_to(s.capacities);
}

inline void to_json(nlohmann::json& j, ArchiveEntry const& a)
{
    j = nlohmann::json{{"profit", a.profit}, {"chance_weight_sum", a.chance_weight_sum}, {"genes", a.genes}};
}

inline void from_json(nlohmann::json const& j, ArchiveEntry& a)
{
    j.at("profit").get_to(a.profit);
    j.at("chance_weight_sum").get_to(a.chance_weight_sum);
    j.at("genes").get_to(a.genes);
}

inline void to_json(nlohmann::json& j, RunRecord const& r)
{
    j = nlohmann::json{{"seed", r.seed},
                       {"config_digest", r.config_digest},
                       {"algorithm", r.algorithm},
                       {"alpha", r.alpha},
                       {"population_size", r.population_size},
                       {"budget", r.budget},
                       {"evaluations", r.evaluations},
                       {"dynamic", r.dynamic},
                       {"num_changes", r.num_changes},
                       {"snapshots", r.snapshots},
                       {"final_front", r.final_front},
                       {"change_log", r.change_log}};
}

inline void from_json(nlohmann::json const& j, RunRecord& r)
{
    j.at("seed").get_to(r.seed);
    j.at("config_digest").get_to(r.config_digest);
    j.at("algorithm").get_to(r.algorithm);
    j.at("alpha").get_to(r.alpha);
    j.at("population_size").get_to(r.population_size);
    j.at("budget").get_to(r.budget);
    j.at("evaluations").get_to(r.evaluations);
    j.at("dynamic").get_to(r.dynamic);
    j.at("num_changes").get_to(r.num_changes);
    j.at("snapshots").get_to(r.snapshots);
    j.at("final_front").get_to(r.final_front);
    j.at("change_log").get_to(r.change_log);
}

} // namespace dccmkp
