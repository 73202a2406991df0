#pragma once

#include <cstdint>
#include <random>

namespace shapeboost {

/// SplitMix64 finalizer; spreads consecutive seeds over the state space.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for resample `stream` under a master seed.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(mix_seed(mix_seed(seed) ^ mix_seed(stream + 1)));
}

} // namespace shapeboost
