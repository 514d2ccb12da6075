#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace plepi {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for a named substream ("sim", "corrupt", "train", "augment") of a
/// master seed, optionally indexed (per tile, per field, per round).
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t substream_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(master ^ fnv1a(name)) + index);
}

inline Rng make_rng(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
    return Rng{substream_seed(master, name, index)};
}

/// Standard normal draw via Box-Muller on the raw engine, so sequences do
/// not depend on the standard library's distribution implementations.
inline double uniform01(Rng& rng) noexcept {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) noexcept;

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

double gamma_draw(Rng& rng, double shape);
std::uint64_t poisson_draw(Rng& rng, double mean);

}  // namespace plepi
