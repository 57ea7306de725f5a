#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vsa {

// splitmix64 step; used to derive independent substream seeds from a base
// seed without consuming the base generator.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic seed for a named substream, e.g.
// derive_seed(seed, {sweep_index, trial_index}). Order matters.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = base;
  std::uint64_t out = splitmix64(s);
  for (std::uint64_t p : path) {
    s = out ^ (p + 0x9E3779B97F4A7C15ULL + (out << 6) + (out >> 2));
    out = splitmix64(s);
  }
  return out;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

}  // namespace vsa
