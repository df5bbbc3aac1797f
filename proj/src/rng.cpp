#include "pjem/rng.hpp"

#include <cmath>
#include <numbers>

namespace pjem {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) {
  std::uint64_t state = seed ^ (0x9e3779b97f4a7c15ull + (value << 6) + (value >> 2));
  return splitmix64(state);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t state = seed;
  // Scramble so that small consecutive seeds give unrelated streams.
  std::uint64_t scrambled = splitmix64(state);
  engine_.seed(scrambled);
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

std::uint32_t Rng::below(std::uint32_t n) {
  // Rejection sampling over the top 32 bits; unbiased for every n.
  const std::uint64_t span = 0x100000000ull;
  const std::uint64_t limit = span - span % n;
  for (;;) {
    std::uint64_t draw = next_u64() >> 32;
    if (draw < limit) return static_cast<std::uint32_t>(draw % n);
  }
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller; u1 is nudged away from 0 so the log stays finite.
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double radius = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    std::uint32_t j = below(static_cast<std::uint32_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
  }
  return perm;
}

}  // namespace pjem
