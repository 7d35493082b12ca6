#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aquagan {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Per-sample seed, independent of visiting order.
inline std::uint64_t derive_seed(std::uint64_t global, std::uint64_t sample, std::uint64_t epoch) {
  return splitmix64(splitmix64(splitmix64(global) ^ sample) ^ epoch);
}

// Uniform in [0,1) from the top 53 bits; portable across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline bool coin_flip(Rng& rng) { return (rng() >> 63) != 0; }

}  // namespace aquagan
