#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace scpo {

using Rng = std::mt19937_64;

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream derivation: the same (seed, stage, iteration, key)
/// always yields the same stream, independent of call order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage,
                                    std::uint64_t iteration = 0,
                                    std::string_view key = {}) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a64(stage));
  h = splitmix64(h ^ iteration);
  if (!key.empty()) h = splitmix64(h ^ fnv1a64(key));
  return h;
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace scpo
