#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dccmkp/error.hpp"
#include "dccmkp/rng.hpp"

namespace dccmkp {

enum class SetLabel { FK1, FK3, FK4, CUSTOM };
enum class Correlation { STRONG, UNCORRELATED };
enum class VarianceRegime { V1, V2, CUSTOM };

struct Item {
    std::int64_t profit = 0;
    std::int64_t mean_weight = 0;
    double variance = 0.0;

    friend auto operator==(Item const&, Item const&) -> bool = default;
};

struct Instance {
    std::vector<Item> items;
    std::vector<double> capacities;
    SetLabel set_label = SetLabel::CUSTOM;
    Correlation correlation = Correlation::UNCORRELATED;
    VarianceRegime variance_regime = VarianceRegime::CUSTOM;
    std::uint64_t seed = 0;

    [[nodiscard]] auto item_count() const noexcept -> std::size_t { return items.size(); }
    [[nodiscard]] auto knapsack_count() const noexcept -> std::size_t { return capacities.size(); }

    friend auto operator==(Instance const&, Instance const&) -> bool = default;
};

// ---------------------------------------------------------------------------
// label <-> text

inline auto to_string(SetLabel v) -> std::string_view
{
    switch (v) {
    case SetLabel::FK1: return "FK1";
    case SetLabel::FK3: return "FK3";
    case SetLabel::FK4: return "FK4";
    case SetLabel::CUSTOM: return "CUSTOM";
    }
    return "CUSTOM";
}

inline auto to_string(Correlation v) -> std::string_view
{
    return v == Correlation::STRONG ? "STRONG" : "UNCORRELATED";
}

inline auto to_string(VarianceRegime v) -> std::string_view
{
    switch (v) {
    case VarianceRegime::V1: return "V1";
    case VarianceRegime::V2: return "V2";
    case VarianceRegime::CUSTOM: return "CUSTOM";
    }
    return "CUSTOM";
}

inline auto parse_set_label(std::string_view s) -> std::optional<SetLabel>
{
    if (s == "FK1") { return SetLabel::FK1; }
    if (s == "FK3") { return SetLabel::FK3; }
    if (s == "FK4") { return SetLabel::FK4; }
    if (s == "CUSTOM") { return SetLabel::CUSTOM; }
    return std::nullopt;
}

inline auto parse_correlation(std::string_view s) -> std::optional<Correlation>
{
    if (s == "STRONG") { return Correlation::STRONG; }
    if (s == "UNCORRELATED" || s == "UNCOR") { return Correlation::UNCORRELATED; }
    return std::nullopt;
}

inline auto parse_variance_regime(std::string_view s) -> std::optional<VarianceRegime>
{
    if (s == "V1") { return VarianceRegime::V1; }
    if (s == "V2") { return VarianceRegime::V2; }
    if (s == "CUSTOM") { return VarianceRegime::CUSTOM; }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// benchmark families

struct FamilyShape {
    SetLabel set;
    std::size_t n;
    std::size_t m;
};

inline constexpr std::array<FamilyShape, 8> kBenchmarkShapes{{
    {SetLabel::FK1, 100, 10},
    {SetLabel::FK3, 300, 30},
    {SetLabel::FK4, 300, 150},
    {SetLabel::FK4, 225, 75},
    {SetLabel::FK4, 240, 60},
    {SetLabel::FK4, 375, 75},
    {SetLabel::FK4, 300, 50},
    {SetLabel::FK4, 500, 50},
}};

inline auto is_benchmark_shape(SetLabel set, std::size_t n, std::size_t m) noexcept -> bool
{
    return std::any_of(kBenchmarkShapes.begin(), kBenchmarkShapes.end(),
                       [&](FamilyShape const& s) { return s.set == set && s.n == n && s.m == m; });
}

// Variance draw interval as multiples of the mean weight.
inline auto variance_bounds(VarianceRegime regime) -> std::pair<double, double>
{
    switch (regime) {
    case VarianceRegime::V1: return {0.5, 2.0};
    case VarianceRegime::V2: return {5.0, 10.0};
    case VarianceRegime::CUSTOM: break;
    }
    throw DomainError("variance regime CUSTOM has no generation interval");
}

struct GenerationReport {
    Instance instance;
    int capacity_redraws = 0;
};

inline constexpr int kMaxCapacityRedraws = 1000;

inline auto generate_with_report(SetLabel set, std::size_t n, std::size_t m, Correlation correlation,
                                 VarianceRegime regime, std::uint64_t seed) -> GenerationReport
{
    if (n == 0 || m == 0) {
        throw DomainError("instance needs at least one item and one knapsack");
    }
    if (set != SetLabel::CUSTOM && !is_benchmark_shape(set, n, m)) {
        throw DomainError("(" + std::to_string(n) + ", " + std::to_string(m) + ") is not a " +
                          std::string(to_string(set)) + " shape");
    }
    auto const [var_lo, var_hi] = variance_bounds(regime);

    Stream const root(seed);
    auto weights = root.substream("weights");
    auto profits = root.substream("profits");
    auto variances = root.substream("variances");

    GenerationReport report;
    auto& inst = report.instance;
    inst.set_label = set;
    inst.correlation = correlation;
    inst.variance_regime = regime;
    inst.seed = seed;
    inst.items.resize(n);

    for (auto& item : inst.items) {
        item.mean_weight = weights.uniform_int(10, 1000);
    }
    for (auto& item : inst.items) {
        item.profit = correlation == Correlation::STRONG ? item.mean_weight + 10 : profits.uniform_int(10, 1000);
    }
    for (auto& item : inst.items) {
        auto const mu = static_cast<double>(item.mean_weight);
        item.variance = variances.uniform(var_lo * mu, var_hi * mu);
    }

    auto const mean_total = static_cast<double>(std::accumulate(
        inst.items.begin(), inst.items.end(), std::int64_t{0},
        [](std::int64_t acc, Item const& it) { return acc + it.mean_weight; }));
    auto const target = 0.5 * mean_total;
    auto const lo = 0.4 * mean_total / static_cast<double>(m);
    auto const hi = 0.6 * mean_total / static_cast<double>(m);

    inst.capacities.assign(m, 0.0);
    for (int attempt = 0;; ++attempt) {
        if (attempt > kMaxCapacityRedraws) {
            throw DomainError("could not draw a positive final capacity");
        }
        auto caps = root.substream("capacities", static_cast<std::uint64_t>(attempt));
        double partial = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            inst.capacities[i] = caps.uniform(lo, hi);
            partial += inst.capacities[i];
        }
        inst.capacities[m - 1] = target - partial;
        if (inst.capacities[m - 1] > 0.0) {
            report.capacity_redraws = attempt;
            break;
        }
    }
    return report;
}

inline auto generate(SetLabel set, std::size_t n, std::size_t m, Correlation correlation, VarianceRegime regime,
                     std::uint64_t seed) -> Instance
{
    return generate_with_report(set, n, m, correlation, regime, seed).instance;
}

inline auto total_mean_weight(Instance const& inst) -> std::int64_t
{
    std::int64_t total = 0;
    for (auto const& item : inst.items) {
        total += item.mean_weight;
    }
    return total;
}

// Short identifier such as "FK1_100_10_STRONG_V1_s42", used in file names and baselines.
inline auto instance_id(Instance const& inst) -> std::string
{
    return std::string(to_string(inst.set_label)) + "_" + std::to_string(inst.item_count()) + "_" +
           std::to_string(inst.knapsack_count()) + "_" + std::string(to_string(inst.correlation)) + "_" +
           std::string(to_string(inst.variance_regime)) + "_s" + std::to_string(inst.seed);
}

// ---------------------------------------------------------------------------
// text format
//
//   DCCMKP v1
//   <set_label> <correlation> <variance_regime> <seed>
//   <n> <m>
//   <m capacities, 17 significant digits>
//   <profit> <mean_weight> <variance>      (n lines)
//
// Lines whose first non-blank character is '#' are comments.

inline constexpr std::string_view kInstanceMagic = "DCCMKP v1";

namespace detail {

inline auto format_real(double v) -> std::string
{
    std::array<char, 40> buf{};
    auto const len = std::snprintf(buf.data(), buf.size(), "%.17g", v);
    return std::string(buf.data(), static_cast<std::size_t>(len));
}

inline auto trim(std::string_view s) -> std::string_view
{
    auto const b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    auto const e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline auto split_ws(std::string_view s) -> std::vector<std::string_view>
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) {
            ++i;
        }
        auto const start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') {
            ++i;
        }
        if (i > start) {
            out.push_back(s.substr(start, i - start));
        }
    }
    return out;
}

template <typename T>
auto parse_number(std::string_view token, std::string_view what, std::size_t line) -> T
{
    T value{};
    auto const* first = token.data();
    auto const* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw FormatError("line " + std::to_string(line) + ": cannot parse " + std::string(what) + " '" +
                          std::string(token) + "'");
    }
    return value;
}

} // namespace detail

inline void write_instance(Instance const& inst, std::ostream& out)
{
    out << kInstanceMagic << '\n';
    out << to_string(inst.set_label) << ' ' << to_string(inst.correlation) << ' '
        << to_string(inst.variance_regime) << ' ' << inst.seed << '\n';
    out << inst.item_count() << ' ' << inst.knapsack_count() << '\n';
    for (std::size_t i = 0; i < inst.capacities.size(); ++i) {
        out << (i == 0 ? "" : " ") << detail::format_real(inst.capacities[i]);
    }
    out << '\n';
    for (auto const& item : inst.items) {
        out << item.profit << ' ' << item.mean_weight << ' ' << detail::format_real(item.variance) << '\n';
    }
}

inline void write_instance(Instance const& inst, std::filesystem::path const& path)
{
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot open " + path.string() + " for writing");
    }
    write_instance(inst, out);
}

inline auto read_instance(std::istream& in) -> Instance
{
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto const t = detail::trim(raw);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        lines.emplace_back(lineno, std::string(t));
    }
    if (lines.empty() || lines[0].second != kInstanceMagic) {
        throw FormatError("missing 'DCCMKP v1' header");
    }
    if (lines.size() < 4) {
        throw FormatError("truncated header");
    }

    Instance inst;
    {
        auto const& [ln, text] = lines[1];
        auto tok = detail::split_ws(text);
        if (tok.size() != 4) {
            throw FormatError("line " + std::to_string(ln) + ": expected '<set> <correlation> <variance> <seed>'");
        }
        auto set = parse_set_label(tok[0]);
        auto cor = parse_correlation(tok[1]);
        auto var = parse_variance_regime(tok[2]);
        if (!set || !cor || !var) {
            throw FormatError("line " + std::to_string(ln) + ": unknown label");
        }
        inst.set_label = *set;
        inst.correlation = *cor;
        inst.variance_regime = *var;
        inst.seed = detail::parse_number<std::uint64_t>(tok[3], "seed", ln);
    }
    std::size_t n = 0;
    std::size_t m = 0;
    {
        auto const& [ln, text] = lines[2];
        auto tok = detail::split_ws(text);
        if (tok.size() != 2) {
            throw FormatError("line " + std::to_string(ln) + ": expected '<n> <m>'");
        }
        n = detail::parse_number<std::size_t>(tok[0], "n", ln);
        m = detail::parse_number<std::size_t>(tok[1], "m", ln);
        if (n == 0 || m == 0) {
            throw FormatError("line " + std::to_string(ln) + ": n and m must be positive");
        }
    }
    {
        auto const& [ln, text] = lines[3];
        auto tok = detail::split_ws(text);
        if (tok.size() != m) {
            throw FormatError("line " + std::to_string(ln) + ": declared m=" + std::to_string(m) + " but found " +
                              std::to_string(tok.size()) + " capacities");
        }
        for (auto t : tok) {
            auto const c = detail::parse_number<double>(t, "capacity", ln);
            if (!(c > 0.0)) {
                throw FormatError("line " + std::to_string(ln) + ": capacities must be positive");
            }
            inst.capacities.push_back(c);
        }
    }
    if (lines.size() - 4 != n) {
        throw FormatError("declared n=" + std::to_string(n) + " but found " + std::to_string(lines.size() - 4) +
                          " item rows");
    }
    inst.items.reserve(n);
    for (std::size_t j = 4; j < lines.size(); ++j) {
        auto const& [ln, text] = lines[j];
        auto tok = detail::split_ws(text);
        if (tok.size() != 3) {
            throw FormatError("line " + std::to_string(ln) + ": expected '<profit> <mean_weight> <variance>'");
        }
        Item item;
        item.profit = detail::parse_number<std::int64_t>(tok[0], "profit", ln);
        item.mean_weight = detail::parse_number<std::int64_t>(tok[1], "mean weight", ln);
        item.variance = detail::parse_number<double>(tok[2], "variance", ln);
        if (item.profit < 0) {
            throw FormatError("line " + std::to_string(ln) + ": negative profit");
        }
        if (item.mean_weight <= 0) {
            throw FormatError("line " + std::to_string(ln) + ": mean weight must be positive");
        }
        if (!(item.variance > 0.0)) {
            throw FormatError("line " + std::to_string(ln) + ": variance must be positive");
        }
        inst.items.push_back(item);
    }
    return inst;
}

inline auto read_instance(std::filesystem::path const& path) -> Instance
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    return read_instance(in);
}

} // namespace dccmkp
