#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "dccmkp/objectives.hpp"
#include "dccmkp/rng.hpp"

namespace dccmkp {

// All selection machinery works on minimization vectors g = (-f1, f2).
using Objectives = std::array<double, 2>;

inline auto to_minimization(Fitness const& fit) noexcept -> Objectives { return {-fit.f1, fit.f2}; }

// ---------------------------------------------------------------------------
// decomposition

struct WeightVector {
    Objectives lambda{1.0, 0.0};
    std::vector<std::size_t> neighbors;
};

inline auto tchebycheff(Objectives const& g, Objectives const& lambda, Objectives const& z_star) noexcept -> double
{
    return std::max(lambda[0] * std::abs(g[0] - z_star[0]), lambda[1] * std::abs(g[1] - z_star[1]));
}

inline auto tchebycheff(Fitness const& fit, Objectives const& lambda, Objectives const& z_star) noexcept -> double
{
    return tchebycheff(to_minimization(fit), lambda, z_star);
}

/// Das-Dennis simplex lattice for two objectives: (i/H, 1 - i/H), i = 0..H.
inline auto das_dennis(std::size_t divisions) -> std::vector<Objectives>
{
    std::vector<Objectives> pts;
    pts.reserve(divisions + 1);
    if (divisions == 0) {
        pts.push_back({0.5, 0.5});
        return pts;
    }
    for (std::size_t i = 0; i <= divisions; ++i) {
        auto const a = static_cast<double>(i) / static_cast<double>(divisions);
        pts.push_back({a, 1.0 - a});
    }
    return pts;
}

// Uniform weights with each vector's ceil(fraction * N) nearest weights (itself included).
inline auto make_weight_vectors(std::size_t count, double neighborhood_fraction) -> std::vector<WeightVector>
{
    auto const lattice = das_dennis(count > 0 ? count - 1 : 0);
    auto const t = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(neighborhood_fraction * static_cast<double>(count) - 1e-9)));
    std::vector<WeightVector> out(lattice.size());
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        out[i].lambda = lattice[i];
        std::vector<std::size_t> order(lattice.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto dist = [&](std::size_t k) {
            auto const dx = lattice[i][0] - lattice[k][0];
            auto const dy = lattice[i][1] - lattice[k][1];
            return dx * dx + dy * dy;
        };
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
        order.resize(std::min(t, order.size()));
        out[i].neighbors = std::move(order);
    }
    return out;
}

// ---------------------------------------------------------------------------
// dominance sorting

/// Fast non-dominated sorting (Deb et al.); fronts hold indices in ascending order.
inline auto fast_nondominated_sort(std::span<Fitness const> pop) -> std::vector<std::vector<std::size_t>>
{
    auto const n = pop.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dom_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
            if (dominates(pop[p], pop[q])) {
                dominated[p].push_back(q);
                ++dom_count[q];
            } else if (dominates(pop[q], pop[p])) {
                dominated[q].push_back(p);
                ++dom_count[p];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        if (dom_count[p] == 0) {
            current.push_back(p);
        }
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current) {
            for (auto q : dominated[p]) {
                if (--dom_count[q] == 0) {
                    next.push_back(q);
                }
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

/// Crowding distance within one front. Boundary points get +inf; an objective
/// with zero range contributes nothing.
inline auto crowding_distance(std::span<Fitness const> front) -> std::vector<double>
{
    auto const n = front.size();
    constexpr auto inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), inf);
        return dist;
    }
    std::vector<std::size_t> order(n);
    for (std::size_t obj = 0; obj < 2; ++obj) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto value = [&](std::size_t i) { return to_minimization(front[i])[obj]; };
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
        dist[order.front()] = inf;
        dist[order.back()] = inf;
        auto const range = value(order.back()) - value(order.front());
        if (range <= 0.0) {
            continue;
        }
        for (std::size_t k = 1; k + 1 < n; ++k) {
            dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
        }
    }
    return dist;
}

// ---------------------------------------------------------------------------
// NSGA-III

namespace detail {

inline auto perpendicular_distance(Objectives const& p, Objectives const& w) noexcept -> double
{
    auto const ww = w[0] * w[0] + w[1] * w[1];
    auto const t = (p[0] * w[0] + p[1] * w[1]) / ww;
    auto const dx = p[0] - t * w[0];
    auto const dy = p[1] - t * w[1];
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace detail

struct NichingTrace {
    Objectives ideal{};
    Objectives intercepts{};
    std::vector<std::size_t> association; // reference index per pool member (only S_t members meaningful)
    std::vector<double> distance;
};

/// Reference-point environmental selection of NSGA-III (Deb and Jain) for two
/// objectives. Returns the indices of the `count` survivors taken from `pool`.
inline auto nsga3_environmental_selection(std::span<Fitness const> pool, std::size_t count,
                                          std::span<Objectives const> references, Stream& rng,
                                          NichingTrace* trace = nullptr) -> std::vector<std::size_t>
{
    auto const fronts = fast_nondominated_sort(pool);
    std::vector<std::size_t> chosen;
    std::vector<std::size_t> candidates; // S_t
    std::size_t last = 0;
    for (; last < fronts.size(); ++last) {
        candidates.insert(candidates.end(), fronts[last].begin(), fronts[last].end());
        if (candidates.size() >= count) {
            break;
        }
        chosen.insert(chosen.end(), fronts[last].begin(), fronts[last].end());
    }
    if (candidates.size() <= count) {
        return candidates;
    }
    auto const& split_front = fronts[last];

    std::vector<Objectives> g(pool.size());
    for (auto i : candidates) {
        g[i] = to_minimization(pool[i]);
    }
    Objectives ideal{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (auto i : candidates) {
        ideal[0] = std::min(ideal[0], g[i][0]);
        ideal[1] = std::min(ideal[1], g[i][1]);
    }
    for (auto i : candidates) {
        g[i][0] -= ideal[0];
        g[i][1] -= ideal[1];
    }

    // Extreme points by achievement scalarization along each axis.
    std::array<Objectives, 2> extreme{};
    for (std::size_t axis = 0; axis < 2; ++axis) {
        double best = std::numeric_limits<double>::infinity();
        for (auto i : candidates) {
            auto const asf = std::max(g[i][0] / (axis == 0 ? 1.0 : 1e-6), g[i][1] / (axis == 1 ? 1.0 : 1e-6));
            if (asf < best) {
                best = asf;
                extreme[axis] = g[i];
            }
        }
    }
    // Hyperplane x/a0 + y/a1 = 1 through both extreme points.
    Objectives intercepts{};
    bool ok = false;
    {
        auto const det = extreme[0][0] * extreme[1][1] - extreme[0][1] * extreme[1][0];
        if (std::abs(det) > 1e-12) {
            auto const b0 = (extreme[1][1] - extreme[0][1]) / det;
            auto const b1 = (extreme[0][0] - extreme[1][0]) / det;
            if (b0 > 0.0 && b1 > 0.0) {
                intercepts = {1.0 / b0, 1.0 / b1};
                ok = intercepts[0] > 1e-10 && intercepts[1] > 1e-10;
            }
        }
    }
    if (!ok) {
        Objectives nadir{0.0, 0.0};
        for (auto i : fronts[0]) {
            nadir[0] = std::max(nadir[0], g[i][0]);
            nadir[1] = std::max(nadir[1], g[i][1]);
        }
        for (std::size_t k = 0; k < 2; ++k) {
            if (nadir[k] <= 1e-10) {
                for (auto i : candidates) {
                    nadir[k] = std::max(nadir[k], g[i][k]);
                }
            }
            intercepts[k] = nadir[k] > 1e-10 ? nadir[k] : 1.0;
        }
    }

    std::vector<std::size_t> assoc(pool.size(), 0);
    std::vector<double> pdist(pool.size(), 0.0);
    for (auto i : candidates) {
        Objectives const p{g[i][0] / intercepts[0], g[i][1] / intercepts[1]};
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < references.size(); ++r) {
            auto const d = detail::perpendicular_distance(p, references[r]);
            if (d < best) {
                best = d;
                assoc[i] = r;
            }
        }
        pdist[i] = best;
    }
    if (trace != nullptr) {
        trace->ideal = ideal;
        trace->intercepts = intercepts;
        trace->association = assoc;
        trace->distance = pdist;
    }

    std::vector<std::size_t> niche(references.size(), 0);
    for (auto i : chosen) {
        ++niche[assoc[i]];
    }
    std::vector<std::vector<std::size_t>> pending(references.size());
    for (auto i : split_front) {
        pending[assoc[i]].push_back(i);
    }
    std::vector<bool> excluded(references.size(), false);
    auto remaining = count - chosen.size();
    while (remaining > 0) {
        std::size_t min_count = std::numeric_limits<std::size_t>::max();
        for (std::size_t r = 0; r < references.size(); ++r) {
            if (!excluded[r]) {
                min_count = std::min(min_count, niche[r]);
            }
        }
        std::vector<std::size_t> tied;
        for (std::size_t r = 0; r < references.size(); ++r) {
            if (!excluded[r] && niche[r] == min_count) {
                tied.push_back(r);
            }
        }
        auto const r = tied.size() == 1 ? tied.front() : tied[rng.index(tied.size())];
        auto& members = pending[r];
        if (members.empty()) {
            excluded[r] = true;
            continue;
        }
        std::size_t pick = 0;
        if (niche[r] == 0) {
            for (std::size_t k = 1; k < members.size(); ++k) {
                if (pdist[members[k]] < pdist[members[pick]]) {
                    pick = k;
                }
            }
        } else {
            pick = rng.index(members.size());
        }
        chosen.push_back(members[pick]);
        members.erase(members.begin() + static_cast<std::ptrdiff_t>(pick));
        ++niche[r];
        --remaining;
    }
    return chosen;
}

// ---------------------------------------------------------------------------
// SPEA2

inline auto spea2_neighbor_k(std::size_t pool_size) noexcept -> std::size_t
{
    return static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(pool_size))));
}

/// SPEA2 fitness R(i) + D(i) over a combined population and archive.
///
/// S(i) counts the members i dominates, R(i) sums S over the dominators of i,
/// D(i) = 1 / (sigma_k + 2) with sigma_k the distance to the k-th nearest
/// other member in objective space, k = floor(sqrt(pool size)) unless given.
inline auto spea2_fitness(std::span<Fitness const> pool, std::size_t k = 0) -> std::vector<double>
{
    auto const n = pool.size();
    if (k == 0) {
        k = spea2_neighbor_k(n);
    }
    std::vector<std::size_t> strength(n, 0);
    std::vector<std::vector<std::size_t>> dominators(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && dominates(pool[i], pool[j])) {
                ++strength[i];
                dominators[j].push_back(i);
            }
        }
    }
    std::vector<Objectives> g(n);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = to_minimization(pool[i]);
    }
    std::vector<double> out(n, 0.0);
    std::vector<double> d;
    d.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double raw = 0.0;
        for (auto j : dominators[i]) {
            raw += static_cast<double>(strength[j]);
        }
        d.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                d.push_back(std::hypot(g[i][0] - g[j][0], g[i][1] - g[j][1]));
            }
        }
        double sigma = 0.0;
        if (!d.empty()) {
            auto const kth = std::min(k, d.size()) - 1;
            std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kth), d.end());
            sigma = d[kth];
        }
        out[i] = raw + 1.0 / (sigma + 2.0);
    }
    return out;
}

/// SPEA2 environmental selection: keep all members with fitness < 1, fill
/// with the best dominated members or truncate by iteratively removing the
/// member whose sorted distance list to the others is lexicographically smallest.
inline auto spea2_environmental_selection(std::span<Fitness const> pool, std::span<double const> fitness,
                                          std::size_t archive_size) -> std::vector<std::size_t>
{
    auto const n = pool.size();
    std::vector<std::size_t> keep;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
        (fitness[i] < 1.0 ? keep : rest).push_back(i);
    }
    if (keep.size() < archive_size) {
        std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });
        for (std::size_t k = 0; k < rest.size() && keep.size() < archive_size; ++k) {
            keep.push_back(rest[k]);
        }
        return keep;
    }
    if (keep.size() == archive_size) {
        return keep;
    }

    auto const q = keep.size();
    std::vector<Objectives> g(q);
    for (std::size_t a = 0; a < q; ++a) {
        g[a] = to_minimization(pool[keep[a]]);
    }
    std::vector<double> dist(q * q, 0.0);
    for (std::size_t a = 0; a < q; ++a) {
        for (std::size_t b = a + 1; b < q; ++b) {
            auto const d = std::hypot(g[a][0] - g[b][0], g[a][1] - g[b][1]);
            dist[a * q + b] = d;
            dist[b * q + a] = d;
        }
    }
    // Neighbors of each member sorted by distance; removed members are skipped lazily.
    std::vector<std::vector<std::size_t>> nbrs(q);
    for (std::size_t a = 0; a < q; ++a) {
        auto& v = nbrs[a];
        v.reserve(q - 1);
        for (std::size_t b = 0; b < q; ++b) {
            if (b != a) {
                v.push_back(b);
            }
        }
        std::stable_sort(v.begin(), v.end(), [&](std::size_t x, std::size_t y) { return dist[a * q + x] < dist[a * q + y]; });
    }
    std::vector<bool> alive(q, true);
    // true if a's distance list is lexicographically smaller than b's
    auto more_crowded_than = [&](std::size_t a, std::size_t b) {
        std::size_t ia = 0;
        std::size_t ib = 0;
        auto const& va = nbrs[a];
        auto const& vb = nbrs[b];
        for (;;) {
            while (ia < va.size() && !alive[va[ia]]) {
                ++ia;
            }
            while (ib < vb.size() && !alive[vb[ib]]) {
                ++ib;
            }
            if (ia == va.size() || ib == vb.size()) {
                return false;
            }
            auto const da = dist[a * q + va[ia]];
            auto const db = dist[b * q + vb[ib]];
            if (da != db) {
                return da < db;
            }
            ++ia;
            ++ib;
        }
    };
    for (auto size = q; size > archive_size; --size) {
        std::size_t victim = q;
        for (std::size_t a = 0; a < q; ++a) {
            if (!alive[a]) {
                continue;
            }
            if (victim == q || more_crowded_than(a, victim)) {
                victim = a;
            }
        }
        alive[victim] = false;
    }
    std::vector<std::size_t> out;
    out.reserve(archive_size);
    for (std::size_t a = 0; a < q; ++a) {
        if (alive[a]) {
            out.push_back(keep[a]);
        }
    }
    return out;
}

} // namespace dccmkp
