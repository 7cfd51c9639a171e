#pragma once

#include <cstdint>
#include <random>

namespace matchmarket {

using RandomEngine = std::mt19937_64;

/// SplitMix64 finalizer. Used only to derive well-separated engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream keyed by (seed, stream). Streams are independent of each
/// other and of the order in which they are requested, so parallel trials draw
/// the same numbers as a sequential run.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline RandomEngine make_engine(std::uint64_t seed, std::uint64_t stream) {
  return RandomEngine(stream_seed(seed, stream));
}

}  // namespace matchmarket
