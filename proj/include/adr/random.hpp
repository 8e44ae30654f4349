#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace adr {

/// Source of randomness consumed by every stochastic operation.
///
/// Randomizers, goal generators and samplers take a `RandomSource&` so tests
/// can substitute a scripted stream. `Rng` is the production implementation.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  /// Uniform on [0, 1).
  virtual double uniform01() = 0;
  virtual double normal(double mean, double stddev) = 0;
  /// Exponential with the given rate (mean 1/rate).
  virtual double exponential(double rate) = 0;

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  bool coin(double p_true) { return uniform01() < p_true; }
};

class Rng final : public RandomSource {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() override { return unit_(engine_); }

  double normal(double mean, double stddev) override {
    // Always consume a draw so stream alignment does not depend on stddev.
    return mean + stddev * standard_(engine_);
  }

  double exponential(double rate) override {
    return std::exponential_distribution<double>(rate)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Independent child stream; deterministic in the parent state.
  Rng split() { return Rng(mix(engine_())); }

  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL));
  }

 private:
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> standard_{0.0, 1.0};
};

}  // namespace adr
