#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace attnswitch {

// Stream purposes mixed into derived seeds so that independent consumers of
// one master seed never share a sequence.
enum class StreamPurpose : std::uint64_t {
    Pool = 1,
    Noise = 2,
    HumanAction = 3,
    TeamDraw = 4,
    Trial = 5,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Folds a list of integers into one seed. Order matters.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : parts) h = mix64(h ^ mix64(p));
    return h;
}

using RngStream = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(RngStream& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(RngStream& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

}  // namespace attnswitch
