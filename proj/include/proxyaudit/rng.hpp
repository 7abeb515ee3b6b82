#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "proxyaudit/errors.hpp"
#include "proxyaudit/linalg.hpp"

namespace proxyaudit {

// splitmix64 finalizer; diffuses (seed ^ salt) into an independent stream seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed ^ salt;
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z = z ^ (z >> 31);
  return z;
}

// Deterministic generator: mt19937_64 (standard-specified sequence) with
// sampling routines implemented here so output never depends on the standard
// library's distribution internals.
class Rng {
public:
  explicit Rng(std::uint64_t seed)
      : eng_(mix_seed(seed, 0)), seed_base_(seed) {}

  // Substream derivation, e.g. one stream per Monte Carlo replicate or per
  // region, independent of scheduling.
  Rng derive(std::uint64_t salt) const {
    return Rng(mix_seed(seed_base_, salt + 1));
  }

  std::uint64_t bits() { return eng_(); }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw ValidationError("uniform_index: n must be positive");
    // rejection to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return x % n;
  }

  // standard normal via Box-Muller (no cached spare, so the draw count per
  // call is fixed and streams stay reproducible)
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  // draw an index with probability proportional to weights
  int categorical(const Vector& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw ValidationError("categorical: negative weight");
      total += w;
    }
    if (total <= 0.0) throw ValidationError("categorical: all weights zero");
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // draw from a precomputed cumulative distribution (last entry == total mass)
  int categorical_cdf(const Vector& cdf) {
    const double u = uniform() * cdf.back();
    // p is tiny everywhere in this library; linear scan beats binary search
    for (std::size_t i = 0; i + 1 < cdf.size(); ++i)
      if (u < cdf[i]) return static_cast<int>(i);
    return static_cast<int>(cdf.size()) - 1;
  }

private:
  std::mt19937_64 eng_;
  std::uint64_t seed_base_ = 0;
};

}  // namespace proxyaudit
