#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dan {

using Rng = std::mt19937_64;

// Uniform on [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer on [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

// Independent stream seed for a (base seed, tag...) tuple.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = base ^ 0x9e3779b97f4a7c15ULL;
  for (std::uint64_t t : tags) {
    h ^= t + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    // splitmix64 finalizer
    h += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    h = z ^ (z >> 31);
  }
  return h;
}

}  // namespace dan
