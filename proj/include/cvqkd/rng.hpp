#pragma once

#include <cstdint>
#include <random>

namespace cvqkd {

/// Random engine used throughout: 64-bit Mersenne Twister seeded through
/// SplitMix64 so that every (seed, stream) pair yields an independent,
/// reproducible sequence regardless of how work is scheduled on threads.
using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0) {
  const std::uint64_t s = splitmix64(seed ^ splitmix64(stream + 0x5851F42D4C957F2DULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Engine(seq);
}

}  // namespace cvqkd
