#pragma once

#include <deque>
#include <stdexcept>

#include "adr/random.hpp"

// Replays fixed values; falls back to an inner Rng when a script runs dry.
class ScriptedRng final : public adr::RandomSource {
 public:
  explicit ScriptedRng(std::uint64_t seed = 1) : fallback_(seed) {}

  std::deque<double> uniforms;
  std::deque<double> standard_normals;  // returned as mean + sd * z
  std::deque<double> exponentials;

  double uniform01() override { return take(uniforms, [&] { return fallback_.uniform01(); }); }
  double normal(double mean, double sd) override {
    return mean + sd * take(standard_normals, [&] { return fallback_.normal(0.0, 1.0); });
  }
  double exponential(double rate) override {
    return take(exponentials, [&] { return fallback_.exponential(rate); });
  }

 private:
  template <class F>
  static double take(std::deque<double>& q, F&& f) {
    if (q.empty()) return f();
    const double v = q.front();
    q.pop_front();
    return v;
  }
  adr::Rng fallback_;
};
