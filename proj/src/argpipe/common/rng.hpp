#pragma once

#include <cstdint>
#include <random>

namespace argpipe {

// All randomness in the project flows through explicitly seeded engines so
// that every stage is reproducible from its config seed.
using Rng = std::mt19937_64;

inline double uniform_real(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
  return d(rng);
}

}  // namespace argpipe
