#pragma once

#include <cstdint>

namespace mcl {

// xoshiro256** (Blackman & Vigna), state expanded from a 64-bit seed with
// splitmix64. All derived draws use fixed formulas so streams are identical
// on every platform:
//   uniform()      = (next() >> 11) * 2^-53                  in [0, 1)
//   uniform(a, b)  = a + (b - a) * uniform()
//   below(n)       = rejection-sampled next() mod n           unbiased
//   normal()       = Box-Muller cosine branch, one draw pair per call
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);
  double normal();

  static std::uint64_t splitmix64(std::uint64_t& state);

 private:
  std::uint64_t s_[4];
};

// Stable seed for a named sub-stream, so independent consumers of one run
// seed do not share draws.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace mcl
