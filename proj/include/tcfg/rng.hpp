#pragma once

#include <cstdint>
#include <random>

namespace tcfg {

using Rng = std::mt19937_64;

// Independent stream for (seed, stream index) pairs; used for per-sample and
// per-purpose randomness so results do not depend on evaluation order.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x7cf9u};
  return Rng(seq);
}

}  // namespace tcfg

namespace tcfg {

// Seed for one purpose (data, init, training, ...) derived from a run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (purpose + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace tcfg
