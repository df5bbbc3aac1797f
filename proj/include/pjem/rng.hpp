#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pjem {

// splitmix64 step; used both as a stream on its own and to combine seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Pure combiner: folds `value` into `seed` and returns a new seed.
// mix_seed(mix_seed(s, a), b) is the canonical way to derive sub-stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value);

// Deterministic random stream. The engine is std::mt19937_64 (bit-exact by
// the standard); all conversions to doubles/integers are done by hand so the
// stream does not depend on implementation-defined distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit resolution.
  double uniform();
  // Uniform in [lo, hi). Returns lo exactly when lo == hi.
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n), n >= 1.
  std::uint32_t below(std::uint32_t n);
  // Gaussian via Box-Muller; consumes exactly two draws per call.
  double normal(double mean, double stddev);
  // Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pjem
