#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "dccmkp/dynamics.hpp"
#include "dccmkp/error.hpp"
#include "dccmkp/evaluation.hpp"
#include "dccmkp/instance.hpp"
#include "dccmkp/moea.hpp"
#include "dccmkp/oracle.hpp"
#include "dccmkp/rng.hpp"

#ifndef DCCMKP_VERSION
#define DCCMKP_VERSION "unknown"
#endif

namespace dccmkp {

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr std::string_view kResultsHeader =
    "instance,algorithm,alpha,variance,eta,nu,run,seed,best_profit,mean_epsilon";

inline constexpr std::uint64_t kDeskBudget = 100'000;
inline constexpr std::uint64_t kDeskWarmup = 10'000;

// ---------------------------------------------------------------------------
// configuration

struct InstanceSpec {
    std::optional<std::filesystem::path> file;
    SetLabel set = SetLabel::FK1;
    std::size_t n = 100;
    std::size_t m = 10;
    Correlation correlation = Correlation::STRONG;
    std::vector<VarianceRegime> variances{VarianceRegime::V1};
    std::uint64_t seed = 0;
    std::size_t line = 0; // section header line, for diagnostics
};

struct DynamicsSpec {
    std::vector<double> etas{0.2};
    std::vector<std::size_t> nus{20};
};

enum class BaselineSource { NONE, GREEDY, EXACT, FILE };

struct ExperimentConfig {
    std::vector<InstanceSpec> instances;
    std::vector<AlgorithmKind> algorithms{AlgorithmKind::MOEAD};
    std::vector<double> alphas{1.0 - 1e-2, 1.0 - 1e-4, 1.0 - 1e-6, 1.0 - 1e-8};
    std::optional<DynamicsSpec> dynamics;
    std::size_t runs = 30;
    std::uint64_t budget = 10'000'000;
    std::optional<std::uint64_t> warmup; // unset: 10^6, or the desk preset's 10^4
    bool desk = false;
    std::size_t population = 100;
    bool count_reevaluations = true;
    DamrsPolicy damrs = DamrsPolicy::single_doubling;
    std::uint64_t master_seed = 0;
    std::filesystem::path output = "results";
    std::size_t parallel = 0; // 0: one worker per hardware thread
    BaselineSource baseline = BaselineSource::NONE;
    std::filesystem::path baseline_file;
    double baseline_time_limit = 10.0; // seconds per branch-and-bound call

    [[nodiscard]] auto effective_warmup() const noexcept -> std::uint64_t
    {
        return warmup.value_or(desk ? kDeskWarmup : 1'000'000);
    }
};

namespace detail {

inline auto config_error(std::size_t line, std::string const& msg) -> ConfigError
{
    return ConfigError("line " + std::to_string(line) + ": " + msg);
}

inline auto split_list(std::string_view v) -> std::vector<std::string>
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : v) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) {
        out.push_back(cur);
    }
    return out;
}

// Accepts plain reals and the shorthand "1-1e-4".
inline auto parse_alpha(std::string const& token, std::size_t line) -> double
{
    double alpha = 0.0;
    if (token.rfind("1-", 0) == 0) {
        alpha = 1.0 - parse_number<double>(token.substr(2), "alpha", line);
    } else {
        alpha = parse_number<double>(token, "alpha", line);
    }
    if (!(alpha >= 0.5 && alpha < 1.0)) {
        throw config_error(line, "alphas: " + token + " is outside [0.5, 1)");
    }
    return alpha;
}

template <typename T>
auto parse_config_number(std::string const& token, std::string_view key, std::size_t line) -> T
{
    try {
        return parse_number<T>(token, key, line);
    } catch (FormatError const&) {
        throw config_error(line, std::string(key) + ": cannot parse '" + token + "'");
    }
}

inline auto parse_bool(std::string const& token, std::string_view key, std::size_t line) -> bool
{
    if (token == "true" || token == "yes" || token == "1") {
        return true;
    }
    if (token == "false" || token == "no" || token == "0") {
        return false;
    }
    throw config_error(line, std::string(key) + ": expected true or false, got '" + token + "'");
}

// "%.10g": short for the usual alphas yet distinct for 1 - 10^-8.
inline auto format_alpha(double alpha) -> std::string
{
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.10g", alpha);
    return buf.data();
}

inline auto format_compact(double v) -> std::string
{
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.12g", v);
    return buf.data();
}

} // namespace detail

/// Parse the experiment file format:
///
///   key = value                 top-level settings
///   [instance]                  one section per instance (repeatable)
///   [dynamics]                  optional; absent means static runs
///
/// '#' starts a comment. List values are separated by commas or blanks.
/// Relative `file` and `baseline` paths resolve against `base_dir`.
inline auto parse_experiment(std::istream& in, std::filesystem::path const& base_dir = {}) -> ExperimentConfig
{
    using detail::config_error;
    ExperimentConfig cfg;
    enum class Section { TOP, INSTANCE, DYNAMICS } section = Section::TOP;
    bool warmup_line_seen = false;
    std::size_t warmup_line = 0;
    std::size_t budget_line = 0;
    std::size_t nu_line = 0;
    std::string raw;
    std::size_t lineno = 0;

    auto resolve = [&](std::string const& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };

    while (std::getline(in, raw)) {
        ++lineno;
        auto const hash = raw.find('#');
        auto const line = detail::trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw config_error(lineno, "malformed section header");
            }
            auto const name = detail::trim(line.substr(1, line.size() - 2));
            if (name == "instance") {
                section = Section::INSTANCE;
                cfg.instances.emplace_back();
                cfg.instances.back().line = lineno;
            } else if (name == "dynamics") {
                if (cfg.dynamics) {
                    throw config_error(lineno, "duplicate [dynamics] section");
                }
                section = Section::DYNAMICS;
                cfg.dynamics.emplace();
            } else {
                throw config_error(lineno, "unknown section [" + std::string(name) + "]");
            }
            continue;
        }
        auto const eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw config_error(lineno, "expected 'key = value'");
        }
        auto const key = std::string(detail::trim(line.substr(0, eq)));
        auto const value = std::string(detail::trim(line.substr(eq + 1)));
        if (value.empty()) {
            throw config_error(lineno, key + ": missing value");
        }
        auto const items = detail::split_list(value);

        if (section == Section::TOP) {
            if (key == "algorithms") {
                cfg.algorithms.clear();
                for (auto const& t : items) {
                    auto a = parse_algorithm(t);
                    if (!a) {
                        throw config_error(lineno, "algorithms: unknown algorithm '" + t + "'");
                    }
                    cfg.algorithms.push_back(*a);
                }
            } else if (key == "alphas") {
                cfg.alphas.clear();
                for (auto const& t : items) {
                    cfg.alphas.push_back(detail::parse_alpha(t, lineno));
                }
            } else if (key == "runs") {
                cfg.runs = detail::parse_config_number<std::size_t>(value, key, lineno);
            } else if (key == "budget") {
                budget_line = lineno;
                if (value == "desk") {
                    cfg.desk = true;
                    cfg.budget = kDeskBudget;
                } else {
                    cfg.desk = false;
                    cfg.budget = detail::parse_config_number<std::uint64_t>(value, key, lineno);
                }
            } else if (key == "warmup") {
                warmup_line_seen = true;
                warmup_line = lineno;
                cfg.warmup = detail::parse_config_number<std::uint64_t>(value, key, lineno);
            } else if (key == "population") {
                cfg.population = detail::parse_config_number<std::size_t>(value, key, lineno);
            } else if (key == "seed") {
                cfg.master_seed = detail::parse_config_number<std::uint64_t>(value, key, lineno);
            } else if (key == "output") {
                cfg.output = resolve(value);
            } else if (key == "parallel") {
                cfg.parallel = detail::parse_config_number<std::size_t>(value, key, lineno);
            } else if (key == "count_reevaluations") {
                cfg.count_reevaluations = detail::parse_bool(value, key, lineno);
            } else if (key == "damrs") {
                if (value == "single") {
                    cfg.damrs = DamrsPolicy::single_doubling;
                } else if (value == "compounding") {
                    cfg.damrs = DamrsPolicy::compounding;
                } else {
                    throw config_error(lineno, "damrs: expected single or compounding, got '" + value + "'");
                }
            } else if (key == "baseline") {
                if (value == "none") {
                    cfg.baseline = BaselineSource::NONE;
                } else if (value == "greedy") {
                    cfg.baseline = BaselineSource::GREEDY;
                } else if (value == "exact") {
                    cfg.baseline = BaselineSource::EXACT;
                } else {
                    cfg.baseline = BaselineSource::FILE;
                    cfg.baseline_file = resolve(value);
                }
            } else if (key == "baseline_time_limit") {
                cfg.baseline_time_limit = detail::parse_config_number<double>(value, key, lineno);
                if (!(cfg.baseline_time_limit > 0.0)) {
                    throw config_error(lineno, "baseline_time_limit must be positive");
                }
            } else {
                throw config_error(lineno, "unknown key '" + key + "'");
            }
        } else if (section == Section::INSTANCE) {
            auto& spec = cfg.instances.back();
            if (key == "file") {
                spec.file = resolve(value);
            } else if (key == "set") {
                auto s = parse_set_label(value);
                if (!s) {
                    throw config_error(lineno, "set: unknown instance set '" + value + "'");
                }
                spec.set = *s;
            } else if (key == "n") {
                spec.n = detail::parse_config_number<std::size_t>(value, key, lineno);
            } else if (key == "m") {
                spec.m = detail::parse_config_number<std::size_t>(value, key, lineno);
            } else if (key == "correlation") {
                auto c = parse_correlation(value);
                if (!c) {
                    throw config_error(lineno, "correlation: unknown class '" + value + "'");
                }
                spec.correlation = *c;
            } else if (key == "variance" || key == "variances") {
                spec.variances.clear();
                for (auto const& t : items) {
                    auto v = parse_variance_regime(t);
                    if (!v || *v == VarianceRegime::CUSTOM) {
                        throw config_error(lineno, key + ": unknown variance regime '" + t + "'");
                    }
                    spec.variances.push_back(*v);
                }
            } else if (key == "seed") {
                spec.seed = detail::parse_config_number<std::uint64_t>(value, key, lineno);
            } else {
                throw config_error(lineno, "unknown instance key '" + key + "'");
            }
        } else {
            auto& dyn = *cfg.dynamics;
            if (key == "eta") {
                dyn.etas.clear();
                for (auto const& t : items) {
                    auto const eta = detail::parse_config_number<double>(t, key, lineno);
                    if (!(eta > 0.0 && eta < 1.0)) {
                        throw config_error(lineno, "eta: " + t + " is outside (0, 1)");
                    }
                    dyn.etas.push_back(eta);
                }
            } else if (key == "nu") {
                nu_line = lineno;
                dyn.nus.clear();
                for (auto const& t : items) {
                    auto const nu = detail::parse_config_number<std::size_t>(t, key, lineno);
                    if (nu == 0) {
                        throw config_error(lineno, "nu must be positive");
                    }
                    dyn.nus.push_back(nu);
                }
            } else if (key == "warmup") {
                warmup_line_seen = true;
                warmup_line = lineno;
                cfg.warmup = detail::parse_config_number<std::uint64_t>(value, key, lineno);
            } else {
                throw config_error(lineno, "unknown dynamics key '" + key + "'");
            }
        }
    }

    if (cfg.instances.empty()) {
        throw config_error(lineno, "no [instance] section");
    }
    if (cfg.algorithms.empty()) {
        throw config_error(lineno, "algorithms: empty list");
    }
    if (cfg.alphas.empty()) {
        throw config_error(lineno, "alphas: empty list");
    }
    if (cfg.runs == 0) {
        throw config_error(lineno, "runs must be positive");
    }
    for (auto const& spec : cfg.instances) {
        if (!spec.file && spec.set != SetLabel::CUSTOM && !is_benchmark_shape(spec.set, spec.n, spec.m)) {
            throw config_error(spec.line, "instance: (" + std::to_string(spec.n) + ", " + std::to_string(spec.m) +
                                              ") is not a " + std::string(to_string(spec.set)) + " shape");
        }
        if (spec.variances.empty()) {
            throw config_error(spec.line, "instance: no variance regime");
        }
    }
    if (cfg.budget < cfg.population) {
        throw config_error(budget_line, "budget (" + std::to_string(cfg.budget) +
                                            ") is smaller than the population size (" +
                                            std::to_string(cfg.population) + ")");
    }
    if (cfg.dynamics) {
        auto const warmup = cfg.effective_warmup();
        if (cfg.budget <= warmup) {
            throw config_error(warmup_line_seen ? warmup_line : budget_line, "budget must exceed the warm-up");
        }
        for (auto nu : cfg.dynamics->nus) {
            if ((cfg.budget - warmup) / nu < 2 * cfg.population) {
                throw config_error(nu_line, "nu = " + std::to_string(nu) +
                                                " leaves less than two generations between changes");
            }
        }
    }
    return cfg;
}

inline auto parse_experiment(std::filesystem::path const& path) -> ExperimentConfig
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config " + path.string());
    }
    return parse_experiment(in, path.parent_path());
}

/// Canonical JSON image of a configuration; the manifest records it and its digest.
inline auto to_json(ExperimentConfig const& cfg) -> nlohmann::json
{
    nlohmann::json j;
    nlohmann::json insts = nlohmann::json::array();
    for (auto const& s : cfg.instances) {
        nlohmann::json v = nlohmann::json::array();
        for (auto r : s.variances) {
            v.push_back(to_string(r));
        }
        if (s.file) {
            insts.push_back({{"file", s.file->generic_string()}});
        } else {
            insts.push_back({{"set", to_string(s.set)},
                             {"n", s.n},
                             {"m", s.m},
                             {"correlation", to_string(s.correlation)},
                             {"variances", v},
                             {"seed", s.seed}});
        }
    }
    j["instances"] = insts;
    nlohmann::json algs = nlohmann::json::array();
    for (auto a : cfg.algorithms) {
        algs.push_back(to_string(a));
    }
    j["algorithms"] = algs;
    nlohmann::json alphas = nlohmann::json::array();
    for (auto a : cfg.alphas) {
        alphas.push_back(detail::format_alpha(a));
    }
    j["alphas"] = alphas;
    if (cfg.dynamics) {
        j["dynamics"] = {{"eta", cfg.dynamics->etas}, {"nu", cfg.dynamics->nus}};
    } else {
        j["dynamics"] = nullptr;
    }
    j["runs"] = cfg.runs;
    j["budget"] = cfg.budget;
    j["warmup"] = cfg.effective_warmup();
    j["population"] = cfg.population;
    j["count_reevaluations"] = cfg.count_reevaluations;
    j["damrs"] = cfg.damrs == DamrsPolicy::single_doubling ? "single" : "compounding";
    j["seed"] = cfg.master_seed;
    static constexpr std::array<char const*, 4> kBaselines{"none", "greedy", "exact", "file"};
    j["baseline"] = kBaselines[static_cast<std::size_t>(cfg.baseline)];
    if (cfg.baseline == BaselineSource::FILE) {
        j["baseline_file"] = cfg.baseline_file.generic_string();
    }
    if (cfg.baseline == BaselineSource::EXACT) {
        j["baseline_time_limit"] = cfg.baseline_time_limit;
    }
    return j;
}

// ---------------------------------------------------------------------------
// grid

struct Cell {
    std::size_t instance_index = 0;
    VarianceRegime variance = VarianceRegime::V1;
    std::optional<double> eta; // set for dynamic cells
    std::size_t nu = 0;
    AlgorithmKind algorithm = AlgorithmKind::MOEAD;
    double alpha = 0.99;
    std::string instance_name;
    std::string key; // stable coordinate string used for seed derivation

    [[nodiscard]] auto dynamic() const noexcept -> bool { return eta.has_value(); }
};

// Name of an instance spec under one variance regime; file instances use their own id.
inline auto spec_name(InstanceSpec const& spec, VarianceRegime variance) -> std::string
{
    if (spec.file) {
        return "file:" + spec.file->filename().string();
    }
    return std::string(to_string(spec.set)) + "_" + std::to_string(spec.n) + "_" + std::to_string(spec.m) + "_" +
           std::string(to_string(spec.correlation)) + "_" + std::string(to_string(variance)) + "_s" +
           std::to_string(spec.seed);
}

inline auto environment_key(std::string const& instance_name, std::optional<double> eta, std::size_t nu)
    -> std::string
{
    if (!eta) {
        return instance_name + "|static";
    }
    return instance_name + "|eta=" + detail::format_compact(*eta) + "|nu=" + std::to_string(nu);
}

/// Cells in canonical order: instance, variance, environment, algorithm, alpha.
/// A cell's key depends only on its own coordinates, so adding cells to the
/// grid never moves another cell's seeds.
inline auto enumerate_cells(ExperimentConfig const& cfg, std::vector<std::vector<std::string>> const& names)
    -> std::vector<Cell>
{
    std::vector<Cell> cells;
    for (std::size_t i = 0; i < cfg.instances.size(); ++i) {
        auto const& spec = cfg.instances[i];
        for (std::size_t v = 0; v < spec.variances.size(); ++v) {
            std::vector<std::pair<std::optional<double>, std::size_t>> envs;
            if (cfg.dynamics) {
                for (auto eta : cfg.dynamics->etas) {
                    for (auto nu : cfg.dynamics->nus) {
                        envs.emplace_back(eta, nu);
                    }
                }
            } else {
                envs.emplace_back(std::nullopt, 0);
            }
            for (auto const& [eta, nu] : envs) {
                for (auto alg : cfg.algorithms) {
                    for (auto alpha : cfg.alphas) {
                        Cell c;
                        c.instance_index = i;
                        c.variance = spec.variances[v];
                        c.eta = eta;
                        c.nu = nu;
                        c.algorithm = alg;
                        c.alpha = alpha;
                        c.instance_name = names[i][v];
                        c.key = environment_key(c.instance_name, eta, nu) + "|" + std::string(to_string(alg)) +
                                "|alpha=" + detail::format_real(alpha);
                        cells.push_back(std::move(c));
                    }
                }
            }
        }
    }
    return cells;
}

inline auto run_seed(std::uint64_t master_seed, Cell const& cell, std::size_t run) -> std::uint64_t
{
    return derive_seed(master_seed, cell.key, run);
}

// One schedule per (instance, environment), shared by every algorithm, alpha and run.
inline auto schedule_seed(std::uint64_t master_seed, Cell const& cell) -> std::uint64_t
{
    return derive_seed(master_seed, "schedule|" + environment_key(cell.instance_name, cell.eta, cell.nu), 0);
}

// Baseline file key: "<instance_id>@<alpha>" for static capacities, with
// "@eta=<eta>@nu=<nu>@p=<period>" appended for each dynamic period.
inline auto baseline_key(std::string const& instance_id, double alpha, std::optional<double> eta = std::nullopt,
                         std::size_t nu = 0, std::size_t period = 0) -> std::string
{
    auto key = instance_id + "@" + detail::format_alpha(alpha);
    if (eta) {
        key += "@eta=" + detail::format_compact(*eta) + "@nu=" + std::to_string(nu) + "@p=" + std::to_string(period);
    }
    return key;
}

// ---------------------------------------------------------------------------
// results table

struct ResultRow {
    std::string instance;
    std::string algorithm;
    double alpha = 0.0;
    std::string variance;
    std::optional<double> eta;
    std::size_t nu = 0;
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::int64_t best_profit = 0;
    std::optional<double> mean_epsilon;
};

inline auto to_csv_line(ResultRow const& r) -> std::string
{
    std::string out = r.instance + "," + r.algorithm + "," + detail::format_alpha(r.alpha) + "," + r.variance + ",";
    out += r.eta ? detail::format_compact(*r.eta) : std::string();
    out += ",";
    out += r.eta ? std::to_string(r.nu) : std::string();
    out += "," + std::to_string(r.run) + "," + std::to_string(r.seed) + "," + std::to_string(r.best_profit) + ",";
    out += r.mean_epsilon ? detail::format_compact(*r.mean_epsilon) : std::string();
    return out;
}

inline void write_results(std::vector<ResultRow> const& rows, std::ostream& out)
{
    out << kResultsHeader << '\n';
    for (auto const& r : rows) {
        out << to_csv_line(r) << '\n';
    }
}

inline auto read_results(std::istream& in) -> std::vector<ResultRow>
{
    std::vector<ResultRow> rows;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (!raw.empty() && raw.back() == '\r') {
            raw.pop_back();
        }
        if (lineno == 1) {
            if (raw != kResultsHeader) {
                throw FormatError("results header mismatch (schema version " + std::to_string(kResultsSchemaVersion) +
                                  " expected)");
            }
            continue;
        }
        if (raw.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::string cur;
        for (char c : raw) {
            if (c == ',') {
                f.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        f.push_back(cur);
        if (f.size() != 10) {
            throw FormatError("results line " + std::to_string(lineno) + ": expected 10 fields");
        }
        ResultRow r;
        r.instance = f[0];
        r.algorithm = f[1];
        r.alpha = detail::parse_number<double>(f[2], "alpha", lineno);
        r.variance = f[3];
        if (!f[4].empty()) {
            r.eta = detail::parse_number<double>(f[4], "eta", lineno);
            r.nu = detail::parse_number<std::size_t>(f[5], "nu", lineno);
        }
        r.run = detail::parse_number<std::size_t>(f[6], "run", lineno);
        r.seed = detail::parse_number<std::uint64_t>(f[7], "seed", lineno);
        r.best_profit = detail::parse_number<std::int64_t>(f[8], "best_profit", lineno);
        if (!f[9].empty()) {
            r.mean_epsilon = detail::parse_number<double>(f[9], "mean_epsilon", lineno);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// statistics report

namespace detail {

struct GroupKey {
    std::string instance;
    std::string variance;
    std::optional<double> eta;
    std::size_t nu = 0;
    double alpha = 0.0;

    friend auto operator<(GroupKey const& a, GroupKey const& b) -> bool
    {
        return std::tie(a.instance, a.variance, a.eta, a.nu, a.alpha) <
               std::tie(b.instance, b.variance, b.eta, b.nu, b.alpha);
    }
};

// Appendix-style notation for column i: "2(*)3(+)4(-)", 1-based indices.
inline auto notation_for(PosthocResult const& ph, std::size_t i) -> std::string
{
    std::string out;
    for (std::size_t j = 0; j < ph.markers.size(); ++j) {
        if (j != i) {
            out += std::to_string(j + 1) + "(" + std::string(1, ph.markers[i][j]) + ")";
        }
    }
    return out;
}

inline auto metric_report(std::vector<std::string> const& algorithms, std::vector<std::vector<double>> const& groups,
                          bool higher_is_better) -> nlohmann::json
{
    nlohmann::json j;
    nlohmann::json algs = nlohmann::json::array();
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        algs.push_back({{"name", algorithms[a]},
                        {"n", groups[a].size()},
                        {"mean", mean(groups[a])},
                        {"std", stddev(groups[a])}});
    }
    j["algorithms"] = algs;
    auto const usable = groups.size() >= 2 && std::all_of(groups.begin(), groups.end(),
                                                          [](auto const& g) { return !g.empty(); });
    if (!usable) {
        return j;
    }
    PosthocOptions opts;
    opts.higher_is_better = higher_is_better;
    auto const cmp = compare_groups(groups, opts);
    j["kruskal_wallis"] = {{"h", cmp.overall.h}, {"p_value", cmp.overall.p_value},
                           {"significant", cmp.overall.significant}};
    j["adjusted_level"] = cmp.posthoc.adjusted_level;
    nlohmann::json notation = nlohmann::json::object();
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        notation[algorithms[a]] = notation_for(cmp.posthoc, a);
    }
    j["notation"] = notation;
    return j;
}

} // namespace detail

/// Per (instance, variance, environment, alpha) group: descriptive statistics
/// per algorithm, Kruskal-Wallis and Bonferroni markers for best profit and,
/// where available, mean offline error.
inline auto compute_stats(std::vector<ResultRow> const& rows) -> nlohmann::json
{
    std::map<detail::GroupKey, std::vector<ResultRow const*>> groups;
    std::vector<std::string> algorithm_order;
    for (auto const& r : rows) {
        groups[{r.instance, r.variance, r.eta, r.nu, r.alpha}].push_back(&r);
        if (std::find(algorithm_order.begin(), algorithm_order.end(), r.algorithm) == algorithm_order.end()) {
            algorithm_order.push_back(r.algorithm);
        }
    }
    nlohmann::json out;
    out["schema_version"] = kResultsSchemaVersion;
    out["significance_level"] = kSignificanceLevel;
    nlohmann::json list = nlohmann::json::array();
    for (auto const& [key, members] : groups) {
        std::vector<std::string> algs;
        for (auto const& name : algorithm_order) {
            if (std::any_of(members.begin(), members.end(), [&](auto const* r) { return r->algorithm == name; })) {
                algs.push_back(name);
            }
        }
        std::vector<std::vector<double>> profit(algs.size());
        std::vector<std::vector<double>> error(algs.size());
        bool have_error = true;
        for (auto const* r : members) {
            auto const a = static_cast<std::size_t>(std::find(algs.begin(), algs.end(), r->algorithm) - algs.begin());
            profit[a].push_back(static_cast<double>(r->best_profit));
            if (r->mean_epsilon) {
                error[a].push_back(*r->mean_epsilon);
            } else {
                have_error = false;
            }
        }
        nlohmann::json g;
        g["instance"] = key.instance;
        g["variance"] = key.variance;
        g["alpha"] = detail::format_alpha(key.alpha);
        if (key.eta) {
            g["eta"] = *key.eta;
            g["nu"] = key.nu;
        }
        g["best_profit"] = detail::metric_report(algs, profit, true);
        if (have_error && key.eta) {
            g["mean_epsilon"] = detail::metric_report(algs, error, false);
        }
        list.push_back(std::move(g));
    }
    out["groups"] = list;
    return out;
}

// ---------------------------------------------------------------------------
// running

struct CellFailure {
    std::string cell;
    std::string error;
};

struct ExperimentSummary {
    std::filesystem::path output;
    std::size_t cells = 0;
    std::size_t runs_completed = 0;
    std::vector<CellFailure> failures;
    std::vector<ResultRow> rows;
};

namespace detail {

inline auto safe_file_name(std::string s) -> std::string
{
    for (auto& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) {
            c = '_';
        }
    }
    return s;
}

inline auto utc_timestamp(std::chrono::system_clock::time_point tp) -> std::string
{
    auto const t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::array<char, 32> buf{};
    std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf.data();
}

inline void write_text(std::filesystem::path const& path, std::string const& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

} // namespace detail

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

/// Execute every cell of the grid and write, under `cfg.output`:
/// runs/*.json, results.csv, stats.json and manifest.json. Everything except
/// the manifest's timestamps is a pure function of the configuration.
inline auto run_experiment(ExperimentConfig const& cfg, ProgressCallback const& progress = {}) -> ExperimentSummary
{
    namespace fs = std::filesystem;
    auto const started = std::chrono::system_clock::now();
    auto const t0 = std::chrono::steady_clock::now();

    // instances, per spec and variance regime
    std::vector<std::vector<Instance>> instances(cfg.instances.size());
    std::vector<std::vector<std::string>> names(cfg.instances.size());
    for (std::size_t i = 0; i < cfg.instances.size(); ++i) {
        auto const& spec = cfg.instances[i];
        for (auto v : spec.variances) {
            if (spec.file) {
                instances[i].push_back(read_instance(*spec.file));
            } else {
                instances[i].push_back(generate(spec.set, spec.n, spec.m, spec.correlation, v, spec.seed));
            }
            names[i].push_back(spec.file ? instance_id(instances[i].back()) : spec_name(spec, v));
        }
    }
    auto const cells = enumerate_cells(cfg, names);

    std::vector<BaselineOptimum> file_baselines;
    if (cfg.baseline == BaselineSource::FILE) {
        file_baselines = read_baselines(cfg.baseline_file);
    }

    auto const out_dir = cfg.output;
    fs::create_directories(out_dir / "runs");

    struct Job {
        std::size_t cell;
        std::size_t run;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t r = 0; r < cfg.runs; ++r) {
            jobs.push_back({c, r});
        }
    }

    // Per-cell preparation (schedule and baselines) happens once, serially.
    struct Prepared {
        std::optional<DynamicSchedule> schedule;
        std::vector<BaselineOptimum> baselines;
        std::string error;
    };
    std::vector<Prepared> prepared(cells.size());
    std::map<std::string, BaselineOptimum> baseline_cache;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        auto const& cell = cells[c];
        auto const& inst = instances[cell.instance_index][static_cast<std::size_t>(
            std::find(cfg.instances[cell.instance_index].variances.begin(),
                      cfg.instances[cell.instance_index].variances.end(), cell.variance) -
            cfg.instances[cell.instance_index].variances.begin())];
        auto& prep = prepared[c];
        try {
            std::vector<std::vector<double>> period_caps;
            if (cell.dynamic()) {
                ScheduleParams params;
                params.eta = *cell.eta;
                params.num_changes = cell.nu;
                params.budget_evaluations = cfg.budget;
                params.warmup_evaluations = cfg.effective_warmup();
                params.seed = schedule_seed(cfg.master_seed, cell);
                prep.schedule.emplace(inst.capacities, params);
                period_caps.push_back(inst.capacities);
                for (std::size_t k = 0; k + 1 < cell.nu; ++k) {
                    period_caps.push_back(prep.schedule->change_log()[k].new_capacities);
                }
            } else {
                period_caps.push_back(inst.capacities);
            }
            if (cfg.baseline == BaselineSource::NONE) {
                continue;
            }
            ConfidenceLevel const conf(cell.alpha);
            for (std::size_t k = 0; k < period_caps.size(); ++k) {
                auto const key = cell.dynamic() ? baseline_key(cell.instance_name, cell.alpha, cell.eta, cell.nu, k)
                                                : baseline_key(cell.instance_name, cell.alpha);
                auto it = baseline_cache.find(key);
                if (it == baseline_cache.end()) {
                    BaselineOptimum b;
                    if (cfg.baseline == BaselineSource::GREEDY) {
                        b = greedy_baseline(inst, conf, period_caps[k]);
                    } else if (cfg.baseline == BaselineSource::EXACT) {
                        b = branch_and_bound_optimum(inst, conf, period_caps[k],
                                                     std::chrono::duration<double>(cfg.baseline_time_limit));
                    } else {
                        auto const f = std::find_if(file_baselines.begin(), file_baselines.end(),
                                                    [&](BaselineOptimum const& x) { return x.instance_id == key; });
                        if (f == file_baselines.end()) {
                            throw ConfigError("missing per-period baseline '" + key + "'");
                        }
                        b = *f;
                        b.method = BaselineMethod::EXTERNAL_FILE;
                    }
                    b.instance_id = key;
                    b.solution.reset();
                    it = baseline_cache.emplace(key, std::move(b)).first;
                }
                prep.baselines.push_back(it->second);
            }
        } catch (std::exception const& e) {
            prep.error = e.what();
        }
    }

    std::vector<std::optional<ResultRow>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    auto worker = [&] {
        for (;;) {
            auto const j = next.fetch_add(1);
            if (j >= jobs.size()) {
                return;
            }
            auto const& job = jobs[j];
            auto const& cell = cells[job.cell];
            auto const& prep = prepared[job.cell];
            try {
                if (!prep.error.empty()) {
                    throw Error(prep.error);
                }
                auto const& spec = cfg.instances[cell.instance_index];
                auto const vi = static_cast<std::size_t>(
                    std::find(spec.variances.begin(), spec.variances.end(), cell.variance) - spec.variances.begin());
                auto const& inst = instances[cell.instance_index][vi];

                AlgorithmConfig acfg;
                acfg.algorithm = cell.algorithm;
                acfg.population_size = cfg.population;
                acfg.budget_evaluations = cfg.budget;
                acfg.count_reevaluations = cfg.count_reevaluations;
                acfg.damrs_policy = cfg.damrs;
                acfg.seed = run_seed(cfg.master_seed, cell, job.run);
                ConfidenceLevel const conf(cell.alpha);
                auto record = run(inst, conf, acfg, prep.schedule ? &*prep.schedule : nullptr);

                ResultRow row;
                row.instance = cell.instance_name;
                row.algorithm = std::string(to_string(cell.algorithm));
                row.alpha = cell.alpha;
                row.variance = std::string(to_string(cell.variance));
                row.eta = cell.eta;
                row.nu = cell.nu;
                row.run = job.run;
                row.seed = acfg.seed;
                row.best_profit = best_profit(record);
                nlohmann::json doc = record;
                doc["instance"] = cell.instance_name;
                doc["cell"] = cell.key;
                if (!prep.baselines.empty()) {
                    auto const err = offline_error(record, prep.baselines);
                    row.mean_epsilon = err.mean_epsilon;
                    doc["offline_error"] = {{"epsilon_per_change", err.epsilon_per_change},
                                            {"mean_epsilon", err.mean_epsilon}};
                }
                auto const file = detail::safe_file_name(cell.key) + "_r" + std::to_string(job.run) + ".json";
                detail::write_text(out_dir / "runs" / file, doc.dump(1) + "\n");
                results[j] = std::move(row);
            } catch (std::exception const& e) {
                errors[j] = e.what();
            }
            auto const d = done.fetch_add(1) + 1;
            if (progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(d, jobs.size());
            }
        }
    };

    auto threads = cfg.parallel == 0 ? std::max(1U, std::thread::hardware_concurrency()) : cfg.parallel;
    threads = std::min<std::size_t>(threads, std::max<std::size_t>(jobs.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    ExperimentSummary summary;
    summary.output = out_dir;
    summary.cells = cells.size();
    std::vector<nlohmann::json> cell_status(cells.size());
    std::vector<std::size_t> completed(cells.size(), 0);
    std::vector<std::string> first_error(cells.size());
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (results[j]) {
            summary.rows.push_back(*results[j]);
            ++completed[jobs[j].cell];
        } else if (first_error[jobs[j].cell].empty()) {
            first_error[jobs[j].cell] = errors[j];
        }
    }
    summary.runs_completed = summary.rows.size();
    nlohmann::json cells_json = nlohmann::json::array();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        nlohmann::json cj{{"cell", cells[c].key}, {"runs_expected", cfg.runs}, {"runs_completed", completed[c]}};
        if (!first_error[c].empty()) {
            cj["error"] = first_error[c];
            summary.failures.push_back({cells[c].key, first_error[c]});
        }
        cells_json.push_back(std::move(cj));
    }

    std::ostringstream csv;
    write_results(summary.rows, csv);
    detail::write_text(out_dir / "results.csv", csv.str());
    detail::write_text(out_dir / "stats.json", compute_stats(summary.rows).dump(2) + "\n");

    auto const config_json = to_json(cfg);
    std::array<char, 17> hex{};
    std::snprintf(hex.data(), hex.size(), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a(config_json.dump())));
    nlohmann::json manifest;
    manifest["schema_version"] = kResultsSchemaVersion;
    manifest["results_header"] = kResultsHeader;
    manifest["code_version"] = DCCMKP_VERSION;
    manifest["config"] = config_json;
    manifest["config_hash"] = std::string(hex.data(), 16);
    manifest["cells"] = cells_json;
    manifest["failures"] = summary.failures.size();
    manifest["started"] = detail::utc_timestamp(started);
    manifest["finished"] = detail::utc_timestamp(std::chrono::system_clock::now());
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    detail::write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
    return summary;
}

// ---------------------------------------------------------------------------
// plot data

enum class PlotKind { PROFIT_VS_ALPHA, ERROR_VS_NU };

inline auto parse_plot_kind(std::string_view s) -> std::optional<PlotKind>
{
    if (s == "profit_vs_alpha") { return PlotKind::PROFIT_VS_ALPHA; }
    if (s == "error_vs_nu") { return PlotKind::ERROR_VS_NU; }
    return std::nullopt;
}

struct ExportResult {
    std::filesystem::path file;
    std::size_t rows = 0;
    std::vector<std::string> warnings;
};

/// Long-format mean/std/n table per (instance, algorithm, variance, x) written
/// to <dir>/plot_<kind>.csv, with x = alpha or nu in ascending order.
inline auto export_plot_data(std::filesystem::path const& dir, PlotKind kind) -> ExportResult
{
    namespace fs = std::filesystem;
    ExportResult out;
    std::vector<ResultRow> rows;
    if (fs::exists(dir / "results.csv")) {
        std::ifstream in(dir / "results.csv");
        rows = read_results(in);
    } else {
        out.warnings.push_back("no results.csv in " + dir.string());
    }
    std::size_t expected = 0;
    if (fs::exists(dir / "manifest.json")) {
        std::ifstream in(dir / "manifest.json");
        auto const manifest = nlohmann::json::parse(in, nullptr, false);
        if (!manifest.is_discarded() && manifest.contains("config") && manifest["config"].contains("runs")) {
            expected = manifest["config"]["runs"].get<std::size_t>();
        }
    }

    // key: instance, algorithm, variance, eta (error_vs_nu only), x
    using Key = std::tuple<std::string, std::string, std::string, double, double>;
    std::map<Key, std::vector<double>> groups;
    for (auto const& r : rows) {
        if (kind == PlotKind::PROFIT_VS_ALPHA) {
            groups[{r.instance, r.algorithm, r.variance, r.eta.value_or(0.0), r.alpha}].push_back(
                static_cast<double>(r.best_profit));
        } else if (r.eta && r.mean_epsilon) {
            groups[{r.instance + "@" + detail::format_alpha(r.alpha), r.algorithm, r.variance, *r.eta,
                    static_cast<double>(r.nu)}]
                .push_back(*r.mean_epsilon);
        }
    }

    std::ostringstream csv;
    if (kind == PlotKind::PROFIT_VS_ALPHA) {
        csv << "instance,algorithm,variance,alpha,n,mean,std\n";
    } else {
        csv << "instance,alpha,algorithm,variance,eta,nu,n,mean,std\n";
    }
    for (auto const& [key, values] : groups) {
        auto const& [instance, algorithm, variance, eta, x] = key;
        if (expected != 0 && values.size() < expected) {
            out.warnings.push_back(instance + " " + algorithm + " " + variance + " x=" + detail::format_compact(x) +
                                   ": " + std::to_string(values.size()) + " of " + std::to_string(expected) +
                                   " runs");
        }
        if (kind == PlotKind::PROFIT_VS_ALPHA) {
            csv << instance << ',' << algorithm << ',' << variance << ',' << detail::format_alpha(x);
        } else {
            auto const at = instance.rfind('@');
            csv << instance.substr(0, at) << ',' << instance.substr(at + 1) << ',' << algorithm << ',' << variance
                << ',' << detail::format_compact(eta) << ',' << static_cast<std::size_t>(x);
        }
        csv << ',' << values.size() << ',' << detail::format_compact(mean(values)) << ','
            << detail::format_compact(stddev(values)) << '\n';
        ++out.rows;
    }
    if (rows.empty() && out.warnings.empty()) {
        out.warnings.push_back("results.csv in " + dir.string() + " has no rows");
    }
    fs::create_directories(dir);
    out.file = dir / (kind == PlotKind::PROFIT_VS_ALPHA ? "plot_profit_vs_alpha.csv" : "plot_error_vs_nu.csv");
    detail::write_text(out.file, csv.str());
    return out;
}

} // namespace dccmkp
