#pragma once

#include <cstdint>
#include <random>

namespace cubeforest {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child streams.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for the child stream `index` of `master`. Depends only on the pair,
// so trees can be built in any order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

// Uniform double in the open interval (0, 1).
inline double uniform_open01(Rng& rng) {
    // 53 random mantissa bits, offset by half an ulp so 0 is never produced
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace cubeforest
