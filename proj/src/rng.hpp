#pragma once

// Deterministic random helpers shared by the bootstrap and subset sampler.

#include <cstdint>
#include <random>

namespace trace_gauge::detail {

/// Uniform integer in [0, bound) without modulo bias (Lemire's
/// multiply-and-reject method).
inline std::uint64_t bounded(std::mt19937_64& eng, std::uint64_t bound) {
  unsigned __int128 m = static_cast<unsigned __int128>(eng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(eng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Engine for one stream, keyed by (seed, stream index).
inline std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace trace_gauge::detail
