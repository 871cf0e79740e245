#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "dccmkp/experiment.hpp"

using namespace dccmkp;
namespace fs = std::filesystem;

namespace {

auto scratch_dir(std::string const& name) -> fs::path
{
    auto const dir = fs::temp_directory_path() / ("dccmkp_test_" + name);
    fs::remove_all(dir);
    return dir;
}

auto parse(std::string const& text) -> ExperimentConfig
{
    std::istringstream in(text);
    return parse_experiment(in);
}

auto slurp(fs::path const& p) -> std::string
{
    std::ifstream in(p);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Message of the ConfigError thrown by parsing `text`, or "" if none.
auto parse_error(std::string const& text) -> std::string
{
    try {
        parse(text);
    } catch (ConfigError const& e) {
        return e.what();
    }
    return "";
}

constexpr char const* kTiny = R"(
algorithms = NSGA2
alphas = 0.99
runs = 1
budget = 1000
population = 20
seed = 3

[instance]
set = CUSTOM
n = 12
m = 2
correlation = STRONG
variance = V1
seed = 1
)";

} // namespace

TEST(Config, Defaults)
{
    auto const cfg = parse("[instance]\n");
    EXPECT_EQ(cfg.runs, 30U);
    EXPECT_EQ(cfg.budget, 10000000U);
    EXPECT_EQ(cfg.alphas.size(), 4U);
    EXPECT_EQ(cfg.algorithms, std::vector<AlgorithmKind>{AlgorithmKind::MOEAD});
    EXPECT_EQ(cfg.population, 100U);
    EXPECT_FALSE(cfg.dynamics);
}

TEST(Config, FullGrid)
{
    auto const cfg = parse(R"(
algorithms = MOEAD, NSGA2, NSGA3, SPEA2
alphas = 1-1e-2, 1-1e-4, 0.999999
runs = 5
budget = desk
[instance]
set = FK1
n = 100
m = 10
variances = V1, V2
[instance]
set = CUSTOM
n = 8
m = 2
[dynamics]
eta = 0.2
nu = 20, 50
)");
    EXPECT_EQ(cfg.algorithms.size(), 4U);
    EXPECT_DOUBLE_EQ(cfg.alphas[1], 1.0 - 1e-4);
    EXPECT_TRUE(cfg.desk);
    EXPECT_EQ(cfg.budget, kDeskBudget);
    EXPECT_EQ(cfg.effective_warmup(), kDeskWarmup);
    ASSERT_EQ(cfg.instances.size(), 2U);
    EXPECT_EQ(cfg.instances[0].variances.size(), 2U);
    ASSERT_TRUE(cfg.dynamics);
    EXPECT_EQ(cfg.dynamics->nus, (std::vector<std::size_t>{20, 50}));
    std::vector<std::vector<std::string>> names{{"a", "b"}, {"c"}};
    EXPECT_EQ(enumerate_cells(cfg, names).size(), 3U * 2U * 4U * 3U);
}

TEST(Config, LineAnchoredErrors)
{
    auto e = parse_error("runs = 3\nalgorithms = MOEAD, GSEMO\n[instance]\n");
    EXPECT_NE(e.find("line 2"), std::string::npos) << e;
    EXPECT_NE(e.find("algorithms"), std::string::npos) << e;
    EXPECT_NE(e.find("GSEMO"), std::string::npos) << e;

    e = parse_error("[instance]\nset = FK1\nn = 50\n");
    EXPECT_NE(e.find("line 1"), std::string::npos) << e;

    e = parse_error("[instance]\n\nbogus = 1\n");
    EXPECT_NE(e.find("line 3"), std::string::npos) << e;

    e = parse_error("alphas = 1.5\n[instance]\n");
    EXPECT_NE(e.find("line 1"), std::string::npos) << e;

    e = parse_error("budget = 50\n[instance]\n");
    EXPECT_NE(e.find("line 1"), std::string::npos) << e;

    e = parse_error("[instance]\n[dynamics]\nnu = 100000\n");
    EXPECT_NE(e.find("line 3"), std::string::npos) << e;

    EXPECT_FALSE(parse_error("runs = 2\n").empty());
    EXPECT_FALSE(parse_error("[instance\n").empty());
    EXPECT_FALSE(parse_error("[instance]\nvariance = V3\n").empty());
}

TEST(Seeds, StableUnderGridGrowth)
{
    auto small = parse("algorithms = NSGA2\nalphas = 0.99\n[instance]\nset = CUSTOM\nn = 8\nm = 2\n");
    auto large = parse("algorithms = MOEAD, NSGA2, SPEA2\nalphas = 0.9, 0.99, 0.999\n"
                       "[instance]\nset = CUSTOM\nn = 6\nm = 2\n[instance]\nset = CUSTOM\nn = 8\nm = 2\n");
    std::vector<std::vector<std::string>> small_names{{spec_name(small.instances[0], VarianceRegime::V1)}};
    std::vector<std::vector<std::string>> large_names{{spec_name(large.instances[0], VarianceRegime::V1)},
                                                      {spec_name(large.instances[1], VarianceRegime::V1)}};
    auto const a = enumerate_cells(small, small_names);
    auto const b = enumerate_cells(large, large_names);
    ASSERT_EQ(a.size(), 1U);
    auto const it = std::find_if(b.begin(), b.end(), [&](Cell const& c) { return c.key == a[0].key; });
    ASSERT_NE(it, b.end());
    for (std::size_t r = 0; r < 30; ++r) {
        EXPECT_EQ(run_seed(7, a[0], r), run_seed(7, *it, r));
    }
    EXPECT_NE(run_seed(7, a[0], 0), run_seed(7, a[0], 1));
    EXPECT_NE(run_seed(7, a[0], 0), run_seed(8, a[0], 0));
}

TEST(ResultsTable, RoundTrip)
{
    std::vector<ResultRow> rows(2);
    rows[0] = {"FK1_100_10_STRONG_V1_s42", "MOEAD", 1.0 - 1e-8, "V1", std::nullopt, 0, 3, 123456789, 24000, std::nullopt};
    rows[1] = {"X", "SPEA2", 0.99, "V2", 0.2, 50, 0, 1, 17, 12.5};
    std::stringstream io;
    write_results(rows, io);
    EXPECT_EQ(io.str().substr(0, kResultsHeader.size()), kResultsHeader);
    auto const back = read_results(io);
    ASSERT_EQ(back.size(), 2U);
    EXPECT_EQ(to_csv_line(back[0]), to_csv_line(rows[0]));
    EXPECT_EQ(to_csv_line(back[1]), to_csv_line(rows[1]));
}

TEST(Experiment, SingleRunProducesOneRecord)
{
    auto cfg = parse(kTiny);
    cfg.output = scratch_dir("single");
    cfg.parallel = 1;
    auto const summary = run_experiment(cfg);
    EXPECT_TRUE(summary.failures.empty());
    EXPECT_EQ(summary.runs_completed, 1U);
    std::size_t records = 0;
    for (auto const& e : fs::directory_iterator(cfg.output / "runs")) {
        auto const j = nlohmann::json::parse(slurp(e.path()));
        EXPECT_EQ(j["algorithm"], "NSGA2");
        ++records;
    }
    EXPECT_EQ(records, 1U);
    std::ifstream csv(cfg.output / "results.csv");
    EXPECT_EQ(read_results(csv).size(), 1U);
    auto const manifest = nlohmann::json::parse(slurp(cfg.output / "manifest.json"));
    EXPECT_EQ(manifest["schema_version"], kResultsSchemaVersion);
    EXPECT_TRUE(manifest.contains("config_hash"));
    EXPECT_TRUE(fs::exists(cfg.output / "stats.json"));
}

TEST(Experiment, RepeatIsByteIdentical)
{
    auto cfg = parse(std::string(kTiny) + "[dynamics]\nnu = 2\nwarmup = 400\n");
    cfg.algorithms = {AlgorithmKind::MOEAD, AlgorithmKind::SPEA2};
    cfg.runs = 2;
    cfg.baseline = BaselineSource::EXACT;
    cfg.output = scratch_dir("repeat_a");
    cfg.parallel = 2;
    run_experiment(cfg);
    auto const first = slurp(cfg.output / "results.csv");
    auto const first_stats = slurp(cfg.output / "stats.json");
    cfg.output = scratch_dir("repeat_b");
    cfg.parallel = 1;
    run_experiment(cfg);
    EXPECT_EQ(slurp(cfg.output / "results.csv"), first);
    EXPECT_EQ(slurp(cfg.output / "stats.json"), first_stats);
    EXPECT_NE(first.find(",0.2,2,"), std::string::npos) << first;
}

TEST(Export, OrderedByAlphaWithCounts)
{
    auto const dir = scratch_dir("export");
    fs::create_directories(dir);
    std::vector<ResultRow> rows;
    for (double alpha : {0.999, 0.99}) {
        for (std::size_t r = 0; r < 3; ++r) {
            rows.push_back({"I", "NSGA2", alpha, "V1", std::nullopt, 0, r, r, static_cast<std::int64_t>(100 + r),
                            std::nullopt});
        }
    }
    rows.pop_back();
    {
        std::ofstream out(dir / "results.csv");
        write_results(rows, out);
        std::ofstream(dir / "manifest.json") << R"({"config": {"runs": 3}})";
    }
    auto const res = export_plot_data(dir, PlotKind::PROFIT_VS_ALPHA);
    EXPECT_EQ(res.rows, 2U);
    auto const csv = slurp(res.file);
    std::istringstream lines(csv);
    std::string header;
    std::string first;
    std::string second;
    std::getline(lines, header);
    std::getline(lines, first);
    std::getline(lines, second);
    EXPECT_EQ(header, "instance,algorithm,variance,alpha,n,mean,std");
    EXPECT_EQ(first, "I,NSGA2,V1,0.99,2,100.5,0.707106781187");
    EXPECT_EQ(second, "I,NSGA2,V1,0.999,3,101,1");
    ASSERT_EQ(res.warnings.size(), 1U);
    EXPECT_NE(res.warnings[0].find("2 of 3"), std::string::npos);
}

TEST(Export, EmptyDirectory)
{
    auto const dir = scratch_dir("export_empty");
    fs::create_directories(dir);
    auto const res = export_plot_data(dir, PlotKind::ERROR_VS_NU);
    EXPECT_EQ(res.rows, 0U);
    EXPECT_FALSE(res.warnings.empty());
    EXPECT_EQ(slurp(res.file), "instance,alpha,algorithm,variance,eta,nu,n,mean,std\n");
}
