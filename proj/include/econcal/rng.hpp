#pragma once

#include <cstdint>
#include <random>

namespace econcal {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent streams from a seed.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream for task `index` of a run seeded with `seed`. Depends only on the
/// pair, never on scheduling, so results are parallelism-invariant.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t s = mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace econcal
