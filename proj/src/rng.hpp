#pragma once

#include <cstdint>

namespace hcf {

// Counter-based splitmix64 generator. Streams derived from (seed, index) are
// independent of scheduling order, which keeps parallel Monte Carlo runs
// reproducible bit-for-bit. We avoid <random> distributions on purpose: their
// output is implementation-defined and would break cross-platform determinism.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Avalanche both inputs before combining: streams must not alias the
  // golden-ratio walk the generator itself performs, or consecutive streams
  // become shifted copies of each other.
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(stream ^ 0xd1b54a32d192ed03ULL));
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace hcf
