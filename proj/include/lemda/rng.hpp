#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace lemda {

// Deterministic random stream. The engine is std::mt19937_64 (whose output
// sequence is fixed by the standard); all distribution transforms are
// hand-rolled so streams do not depend on the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Uniform integer in [0, n), n > 0.
  int uniform_int(int n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (no cached spare, fixed draw order).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  // Beta(a, b) from two gamma draws.
  double beta(double a, double b);

  // Child stream with a seed derived from this one.
  Rng fork() { return Rng(mix(next_u64())); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  // splitmix64 finalizer, used to derive independent seeds.
  static std::uint64_t mix(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
};

// Combines a base seed with a stream tag into a new seed.
inline std::uint64_t seed_stream(std::uint64_t base, std::uint64_t tag) {
  return Rng::mix(base ^ (0x9e3779b97f4a7c15ULL * (tag + 1)));
}

}  // namespace lemda
