#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace mudinet {

// SplitMix64 finalizer. Used both as the documented seed-splitting rule
// (seed_i = master XOR mix64(i)) and to decorrelate raw user seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed-splitting rule for independent work items: seed_i = master ^ mix64(i).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return master ^ mix64(index);
}

// Deterministic random stream. All distributions are implemented here on top
// of the engine's raw bits, so identical seeds give identical draws on every
// platform (std::normal_distribution et al. are not portable).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one spare value cached per pair.
  double normal() {
    if (spare_) {
      double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Exponential with the given mean (inverse CDF).
  double exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

  // Uniform index in [0, n), exact (rejection sampling).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Independent child stream derived from this stream's seed; does not
  // advance or depend on the current engine state.
  RandomStream child(std::uint64_t stream_id) const {
    return RandomStream(derive_seed(seed_, stream_id));
  }

  // Fresh seed drawn from this stream (advances it).
  std::uint64_t fork_seed() { return next_u64(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace mudinet
