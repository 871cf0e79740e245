#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

namespace dccmkp {

namespace detail {

constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr auto mix64(std::uint64_t z) noexcept -> std::uint64_t
{
    z = (z ^ (z >> 30U)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27U)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31U);
}

constexpr auto fnv1a(std::string_view text) noexcept -> std::uint64_t
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace detail

// Combine a parent seed with a label and an index into an independent child seed.
constexpr auto derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index = 0) noexcept
    -> std::uint64_t
{
    auto k = detail::mix64(parent ^ detail::mix64(detail::fnv1a(label)));
    return detail::mix64(k + detail::mix64(index + detail::kGoldenGamma));
}

/// Counter-based generator: the i-th output is a pure function of (key, i).
///
/// Streams are identified by a key; named substreams are obtained with
/// `substream`, so drawing from one stream never shifts another. All
/// distributions are implemented here rather than through <random> so that
/// sequences are identical across standard library implementations.
class Stream {
public:
    using result_type = std::uint64_t;

    constexpr explicit Stream(std::uint64_t key = 0) noexcept : key_(key) {}

    [[nodiscard]] constexpr auto key() const noexcept -> std::uint64_t { return key_; }
    [[nodiscard]] constexpr auto position() const noexcept -> std::uint64_t { return counter_; }

    [[nodiscard]] constexpr auto substream(std::string_view label, std::uint64_t index = 0) const noexcept
        -> Stream
    {
        return Stream(derive_seed(key_, label, index));
    }

    static constexpr auto min() noexcept -> result_type { return 0; }
    static constexpr auto max() noexcept -> result_type { return std::numeric_limits<result_type>::max(); }

    constexpr auto operator()() noexcept -> result_type
    {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGoldenGamma);
    }

    // Uniform on [0, 1) with 53 random bits.
    auto uniform() noexcept -> double { return static_cast<double>((*this)() >> 11U) * 0x1.0p-53; }

    auto uniform(double lo, double hi) noexcept -> double { return lo + (hi - lo) * uniform(); }

    // Uniform integer on the closed range [lo, hi], unbiased (Lemire's method).
    auto uniform_int(std::int64_t lo, std::int64_t hi) noexcept -> std::int64_t
    {
        auto const range = static_cast<std::uint64_t>(hi - lo) + 1U;
        if (range == 0) { // full 64-bit span
            return static_cast<std::int64_t>((*this)());
        }
        auto x = (*this)();
        auto m = static_cast<unsigned __int128>(x) * range;
        auto low = static_cast<std::uint64_t>(m);
        if (low < range) {
            auto const threshold = (0 - range) % range;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<unsigned __int128>(x) * range;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return lo + static_cast<std::int64_t>(m >> 64U);
    }

    auto index(std::size_t size) noexcept -> std::size_t
    {
        return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(size) - 1));
    }

    auto bernoulli(double p) noexcept -> bool { return uniform() < p; }

    // Standard normal via Box-Muller; the spare deviate is cached.
    auto normal() noexcept -> double
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        auto const u2 = uniform();
        auto const r = std::sqrt(-2.0 * std::log(u1));
        auto const theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    auto normal(double mean, double stddev) noexcept -> double { return mean + stddev * normal(); }

    template <typename Range>
    void shuffle(Range& range) noexcept
    {
        auto const n = std::size(range);
        for (std::size_t i = n; i > 1; --i) {
            auto j = index(i);
            using std::swap;
            swap(range[i - 1], range[j]);
        }
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace dccmkp
