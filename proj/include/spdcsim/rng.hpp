#pragma once

#include <cstdint>
#include <random>

namespace spdcsim {

using Rng = std::mt19937_64;

// splitmix64 step; decorrelates nearby inputs.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Per-task seed derived from a master seed. Work item i always gets the same
// stream no matter how items are distributed over threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index * 0x9E3779B97F4A7C15ULL + 1));
}

} // namespace spdcsim
