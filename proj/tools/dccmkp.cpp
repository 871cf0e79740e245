// dccmkp: instance generation, experiment runs, statistics, plot export and oracles.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dccmkp/dccmkp.hpp"

namespace fs = std::filesystem;
using namespace dccmkp;

namespace {

constexpr int kExitPartial = 1;
constexpr int kExitConfig = 2;

struct GenOptions {
    std::string set = "FK1";
    std::size_t n = 100;
    std::size_t m = 10;
    std::string correlation = "STRONG";
    std::string variance = "V1";
    std::uint64_t seed = 0;
    bool all = false;
    std::string out = "-";
};

struct RunOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> budget;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> parallel;
    std::optional<std::string> out;
    bool quiet = false;
};

struct OracleOptions {
    std::string instance;
    double alpha = 0.99;
    bool exact = false;
    bool greedy = false;
    bool exhaustive = false;
    double time_limit = 60.0;
};

auto cmd_gen(GenOptions const& o) -> int
{
    auto correlation = parse_correlation(o.correlation);
    auto variance = parse_variance_regime(o.variance);
    auto set = parse_set_label(o.set);
    if (!correlation || !variance || *variance == VarianceRegime::CUSTOM || !set) {
        std::cerr << "gen: unknown set, correlation or variance regime\n";
        return kExitConfig;
    }
    if (o.all) {
        if (o.out == "-") {
            std::cerr << "gen --all needs --out <directory>\n";
            return kExitConfig;
        }
        fs::create_directories(o.out);
        for (auto const& shape : kBenchmarkShapes) {
            for (auto corr : {Correlation::STRONG, Correlation::UNCORRELATED}) {
                for (auto var : {VarianceRegime::V1, VarianceRegime::V2}) {
                    auto const inst = generate(shape.set, shape.n, shape.m, corr, var, o.seed);
                    auto const path = fs::path(o.out) / (instance_id(inst) + ".txt");
                    write_instance(inst, path);
                    std::cout << path.string() << '\n';
                }
            }
        }
        return 0;
    }
    auto const inst = generate(*set, o.n, o.m, *correlation, *variance, o.seed);
    if (o.out == "-") {
        write_instance(inst, std::cout);
    } else {
        write_instance(inst, fs::path(o.out));
    }
    return 0;
}

auto cmd_run(RunOptions const& o) -> int
{
    ExperimentConfig cfg;
    try {
        cfg = parse_experiment(fs::path(o.config));
        if (o.seed) {
            cfg.master_seed = *o.seed;
        }
        if (o.budget) {
            if (*o.budget == "desk") {
                cfg.desk = true;
                cfg.budget = kDeskBudget;
                cfg.warmup.reset();
            } else {
                cfg.desk = false;
                cfg.budget = detail::parse_number<std::uint64_t>(*o.budget, "--budget", 0);
            }
        }
        if (o.runs) {
            cfg.runs = *o.runs;
        }
        if (o.parallel) {
            cfg.parallel = *o.parallel;
        }
        if (o.out) {
            cfg.output = *o.out;
        } else if (auto const* env = std::getenv("DCCMKP_OUTPUT"); env != nullptr && *env != '\0') {
            cfg.output = env;
        }
        if (cfg.budget < cfg.population) {
            throw ConfigError("--budget is smaller than the population size");
        }
        if (cfg.runs == 0) {
            throw ConfigError("--runs must be positive");
        }
    } catch (Error const& e) {
        std::cerr << o.config << ": " << e.what() << '\n';
        return kExitConfig;
    }

    ProgressCallback progress;
    if (!o.quiet) {
        progress = [](std::size_t done, std::size_t total) {
            std::cerr << "\r" << done << "/" << total << " runs" << std::flush;
            if (done == total) {
                std::cerr << '\n';
            }
        };
    }
    auto const summary = run_experiment(cfg, progress);
    std::cout << summary.runs_completed << " runs over " << summary.cells << " cells written to "
              << summary.output.string() << '\n';
    for (auto const& f : summary.failures) {
        std::cerr << "cell failed: " << f.cell << ": " << f.error << '\n';
    }
    return summary.failures.empty() ? 0 : kExitPartial;
}

auto load_rows(fs::path const& dir) -> std::vector<ResultRow>
{
    std::ifstream in(dir / "results.csv");
    if (!in) {
        throw FormatError("no results.csv in " + dir.string());
    }
    return read_results(in);
}

auto cmd_stats(std::string const& dir) -> int
{
    auto const stats = compute_stats(load_rows(dir));
    std::ofstream(fs::path(dir) / "stats.json") << stats.dump(2) << '\n';
    for (auto const& g : stats["groups"]) {
        std::cout << g["instance"].get<std::string>() << " alpha=" << g["alpha"].get<std::string>();
        if (g.contains("nu")) {
            std::cout << " eta=" << g["eta"].get<double>() << " nu=" << g["nu"].get<std::size_t>();
        }
        std::cout << '\n';
        auto const& bp = g["best_profit"];
        for (auto const& a : bp["algorithms"]) {
            auto const name = a["name"].get<std::string>();
            std::cout << "  " << name << "  best profit " << a["mean"].get<double>() << " +- "
                      << a["std"].get<double>() << " (n=" << a["n"].get<std::size_t>() << ")";
            if (bp.contains("notation")) {
                std::cout << "  " << bp["notation"][name].get<std::string>();
            }
            std::cout << '\n';
        }
    }
    return 0;
}

auto cmd_export(std::string const& dir, std::string const& kind_name) -> int
{
    auto kind = parse_plot_kind(kind_name);
    if (!kind) {
        std::cerr << "export: unknown kind '" << kind_name << "'\n";
        return kExitConfig;
    }
    auto const result = export_plot_data(dir, *kind);
    for (auto const& w : result.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    std::cout << result.file.string() << " (" << result.rows << " rows)\n";
    return 0;
}

auto cmd_oracle(OracleOptions const& o) -> int
{
    auto const inst = read_instance(fs::path(o.instance));
    ConfidenceLevel const conf(o.alpha);
    BaselineOptimum b;
    if (o.greedy) {
        b = greedy_baseline(inst, conf);
    } else if (o.exhaustive) {
        b = exhaustive_optimum(inst, conf);
    } else {
        b = branch_and_bound_optimum(inst, conf, std::chrono::duration<double>(o.time_limit));
    }
    b.instance_id = baseline_key(instance_id(inst), o.alpha);
    std::vector<BaselineOptimum> const rows{b};
    write_baselines(rows, std::cout);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Chance-constrained dynamic multiple knapsack experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(DCCMKP_VERSION));

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate benchmark instances");
    gen_cmd->add_option("--set", gen.set, "FK1, FK3, FK4 or CUSTOM")->capture_default_str();
    gen_cmd->add_option("--n", gen.n, "Number of items")->capture_default_str();
    gen_cmd->add_option("--m", gen.m, "Number of knapsacks")->capture_default_str();
    gen_cmd->add_option("--correlation", gen.correlation, "STRONG or UNCORRELATED")->capture_default_str();
    gen_cmd->add_option("--variance", gen.variance, "V1 or V2")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "Instance seed")->capture_default_str();
    gen_cmd->add_flag("--all", gen.all, "Every benchmark shape, correlation class and variance regime");
    gen_cmd->add_option("--out", gen.out, "Output file ('-' for stdout) or directory with --all")
        ->capture_default_str();

    RunOptions run_opts;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment grid");
    run_cmd->add_option("config", run_opts.config, "Experiment file")->required();
    run_cmd->add_option("--seed", run_opts.seed, "Override the master seed");
    run_cmd->add_option("--budget", run_opts.budget, "Evaluation budget or 'desk'");
    run_cmd->add_option("--runs", run_opts.runs, "Runs per cell");
    run_cmd->add_option("--parallel", run_opts.parallel, "Worker threads (0: all cores)");
    run_cmd->add_option("--out", run_opts.out, "Output directory");
    run_cmd->add_flag("--quiet", run_opts.quiet, "No progress output");

    std::string stats_dir;
    auto* stats_cmd = app.add_subcommand("stats", "Recompute stats.json from results.csv");
    stats_cmd->add_option("dir", stats_dir, "Experiment output directory")->required();

    std::string export_dir;
    std::string export_kind;
    auto* export_cmd = app.add_subcommand("export", "Write plot data");
    export_cmd->add_option("dir", export_dir, "Experiment output directory")->required();
    export_cmd->add_option("--kind", export_kind, "profit_vs_alpha or error_vs_nu")->required();

    OracleOptions oracle;
    auto* oracle_cmd = app.add_subcommand("oracle", "Baseline optimum of an instance file");
    oracle_cmd->add_option("instance", oracle.instance, "Instance file")->required();
    oracle_cmd->add_option("--alpha", oracle.alpha, "Confidence level")->capture_default_str();
    auto* exact_flag = oracle_cmd->add_flag("--exact", oracle.exact, "Branch and bound (default)");
    auto* greedy_flag = oracle_cmd->add_flag("--greedy", oracle.greedy, "Greedy lower bound");
    auto* exhaustive_flag = oracle_cmd->add_flag("--exhaustive", oracle.exhaustive, "Full enumeration");
    exact_flag->excludes(greedy_flag)->excludes(exhaustive_flag);
    greedy_flag->excludes(exhaustive_flag);
    oracle_cmd->add_option("--time-limit", oracle.time_limit, "Branch-and-bound limit in seconds")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_cmd->parsed()) {
            return cmd_gen(gen);
        }
        if (run_cmd->parsed()) {
            return cmd_run(run_opts);
        }
        if (stats_cmd->parsed()) {
            return cmd_stats(stats_dir);
        }
        if (export_cmd->parsed()) {
            return cmd_export(export_dir, export_kind);
        }
        if (oracle_cmd->parsed()) {
            return cmd_oracle(oracle);
        }
    } catch (ConfigError const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (std::exception const& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return 0;
}
