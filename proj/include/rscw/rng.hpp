#pragma once

#include <cstdint>
#include <random>

namespace rscw {

// SplitMix64 step; used to whiten seeds and derive independent substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seedable, splittable generator.  Substreams are derived by hashing
// (seed, stream) so sample i can be produced in isolation, in any order,
// or on any worker with identical results.  Uniform doubles come from the
// top 53 bits of the raw engine output, so draws are reproducible across
// standard libraries (no std::distribution involved).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(whiten(seed)) {}

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x8e1b6e43c9d2f4a7ULL * (stream + 1));
    return splitmix64(s);
  }

  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(derive(seed, stream));
  }

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [0, n).
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(next() % n);
  }

 private:
  static std::uint64_t whiten(std::uint64_t seed) {
    std::uint64_t s = seed;
    return splitmix64(s);
  }

  std::mt19937_64 engine_;
};

}  // namespace rscw
