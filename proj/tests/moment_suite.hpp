#pragma once

// Moment checks for every noise mode and custom formula. Analytic moments are
// derived here by hand, independently of the library code under test.

#include <cmath>
#include <functional>
#include <utility>
#include <numbers>
#include <string>
#include <vector>

#include "adr/randomizers.hpp"
#include "stats_oracles.hpp"

namespace oracle {

struct MomentCase {
  std::string name;
  std::function<double(adr::Rng&)> draw;
  double mean;
  double sd;
};

struct MomentResult {
  std::string name;
  bool mean_ok = false;
  bool sd_ok = false;
  double mean_z = 0.0;
  double sd_z = 0.0;
};

inline double gs(double x) { return std::exp(x - 1.0); }

// Standard errors from the sample itself: SE(mean) = sigma / sqrt(n) with the
// analytic sigma; SE(sd) from the sample fourth central moment.
inline MomentResult check_moments(const MomentCase& c, std::size_t n, std::uint64_t seed) {
  adr::Rng rng(seed);
  std::vector<double> xs(n);
  for (auto& x : xs) x = c.draw(rng);
  long double s = 0.0L;
  for (double x : xs) s += x;
  const long double mean = s / n;
  long double m2 = 0.0L, m4 = 0.0L;
  for (double x : xs) {
    const long double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  const double sd = std::sqrt(static_cast<double>(m2) * n / (n - 1.0));
  MomentResult r;
  r.name = c.name;
  const double se_mean = c.sd / std::sqrt(static_cast<double>(n));
  r.mean_z = se_mean > 0.0 ? std::abs(static_cast<double>(mean) - c.mean) / se_mean
                           : (static_cast<double>(mean) == c.mean ? 0.0 : INFINITY);
  const double var_se = std::sqrt(std::max(0.0L, m4 - m2 * m2) / n);
  const double se_sd = sd > 0.0 ? var_se / (2.0 * sd) : 0.0;
  r.sd_z = se_sd > 0.0 ? std::abs(sd - c.sd) / se_sd : (sd == c.sd ? 0.0 : INFINITY);
  r.mean_ok = r.mean_z <= 3.0;
  r.sd_ok = r.sd_z <= 3.0;
  return r;
}

inline std::vector<MomentCase> moment_cases() {
  using namespace adr;
  std::vector<MomentCase> cases;
  const std::vector<double> lam{0.7, 0.3, -0.4, 1.2};

  {
    GenericRandomizerSpec s{"x", NoiseMode::AG, 1.0, 0, 1};
    const double mu = gs(0.7), sig = gs(0.3);
    cases.push_back({"AG", [=](Rng& r) { return apply_generic(2.0, s, lam, r); },
                     2.0 + folded_normal_mean(mu, sig), std::sqrt(folded_normal_var(mu, sig))});
  }
  {
    GenericRandomizerSpec s{"x", NoiseMode::AG, 1.0, 2, 2};  // negative lambda on both
    const double mu = gs(-0.4), sig = gs(0.4);
    cases.push_back({"AG negative lambda", [=](Rng& r) { return apply_generic(0.0, s, lam, r); },
                     folded_normal_mean(mu, sig), std::sqrt(folded_normal_var(mu, sig))});
  }
  {
    GenericRandomizerSpec s{"x", NoiseMode::UAG, 0.5, 3, 0};
    cases.push_back({"UAG", [=](Rng& r) { return apply_generic(-1.0, s, lam, r); }, -1.0,
                     gs(0.6)});
  }
  {
    GenericRandomizerSpec s{"x", NoiseMode::UAG, 1.0, 0, 0};
    const std::vector<double> one{1.0};
    cases.push_back({"UAG lambda 1", [=](Rng& r) { return apply_generic(0.0, s, one, r); }, 0.0,
                     1.0});
  }
  {
    GenericRandomizerSpec s{"x", NoiseMode::M, 1.0, 1, 2};
    // Lognormal with mu = 0.3, s = 0.4.
    const double m = 0.3, v = 0.16;
    cases.push_back({"M", [=](Rng& r) { return apply_generic(1.5, s, lam, r); },
                     1.5 * std::exp(m + v / 2.0),
                     1.5 * std::sqrt((std::exp(v) - 1.0) * std::exp(2.0 * m + v))});
    cases.push_back({"M log", [=](Rng& r) { return std::log(apply_generic(1.5, s, lam, r) / 1.5); },
                     m, std::sqrt(v)});
  }
  {
    cases.push_back({"joint_limits", [](Rng& r) { return joint_limit_value(0.5, -1.3, r); }, 0.5,
                     std::sqrt(0.1 * gs(1.3))});
  }
  {
    const double li = -0.8, lj = 0.3, lk = 0.5;
    cases.push_back({"action_delay",
                     [=](Rng& r) {
                       ActionDelayModel d;
                       d.begin_episode(lj, r);
                       return d.step(li, lk, r);
                     },
                     std::abs(li),
                     std::abs(li) * std::sqrt((1.0 + lj * lj) * (1.0 + lk * lk) - 1.0)});
  }
  // Support {0, ..., n} with n the nearest integer to lambda.
  for (auto [l, n] : {std::pair{2.3, 2}, std::pair{0.4, 0}, std::pair{3.7, 4}}) {
    const double var = ((n + 1.0) * (n + 1.0) - 1.0) / 12.0;
    cases.push_back({"action_latency " + std::to_string(l),
                     [=](Rng& r) { return static_cast<double>(sample_latency(l, r)); }, n / 2.0,
                     std::sqrt(var)});
  }
  {
    const double a0 = 0.4, li = 0.2, lj = -0.5, lk = 0.9;
    cases.push_back({"action_noise",
                     [=](Rng& r) {
                       ActionNoiseModel m;
                       m.begin_episode(1, li, lj, r);
                       return m.apply(0, a0, lk, r);
                     },
                     a0, std::sqrt(a0 * a0 * gs(li) * gs(li) + gs(0.5) * gs(0.5) + gs(lk) * gs(lk))});
  }
  {
    const double l0 = std::log(0.03), l = 0.6;
    cases.push_back({"backlash log",
                     [=](Rng& r) { return std::log(backlash_value({l0, l0}, l, r)[0]); }, l0,
                     std::abs(l * l0)});
    // Raw magnitudes at a moderate spread; the wide one is too heavy-tailed
    // for a sample fourth moment to pin the standard error.
    const double ln = 0.1, v = ln * ln * l0 * l0;
    cases.push_back({"backlash", [=](Rng& r) { return backlash_value({l0, l0}, ln, r)[1]; },
                     std::exp(l0 + v / 2.0), std::sqrt((std::exp(v) - 1.0) * std::exp(2.0 * l0 + v))});
  }
  {
    const double l = 1.4;
    for (int axis = 0; axis < 3; ++axis) {
      cases.push_back({"gravity axis " + std::to_string(axis),
                       [=](Rng& r) { return gravity_value({0.0, 0.0, -9.81}, l, r)[axis]; },
                       axis == 2 ? -9.81 : 0.0, gs(l) / std::sqrt(3.0)});
    }
  }
  {
    const double m0 = 2.0, l = 0.5;
    const double hi = 0.15 * gs(l);
    cases.push_back({"joint_margin", [=](Rng& r) { return joint_margin_value(m0, l, r); },
                     m0 * hi / 2.0, m0 * hi / std::sqrt(12.0)});
  }
  {
    const double t0 = 0.002, li = 0.3, lj = 0.8;
    // n ~ Exp(rate kappa), kappa ~ U[1250, 10000].
    const double a = 1250.0, b = 10000.0;
    const double en = std::log(b / a) / (b - a);
    const double en2 = 2.0 * (1.0 / a - 1.0 / b) / (b - a);
    const double scale = std::exp(0.6 * li);
    cases.push_back({"time_step", [=](Rng& r) { return time_step_value(t0, li, lj, r); },
                     scale * (t0 + en * std::exp(lj)),
                     scale * std::exp(lj) * std::sqrt(en2 - en * en)});
  }
  {
    ObservationNoiseSpec spec;
    spec.dim_corr = 0;
    spec.dim_uncorr = 1;
    const std::vector<double> l2{0.5, -0.2};
    const double o0 = 3.0;
    const double ea = spec.a0 * std::exp(0.5), eb = spec.b0 * std::exp(0.5),
                 ec = spec.c0 * std::exp(-0.2);
    cases.push_back({"observation_noise",
                     [=](Rng& r) {
                       const std::vector<double> o{o0};
                       return apply_observation_noise(o, spec, l2, r, r)[0];
                     },
                     o0, std::sqrt(o0 * o0 * ea * ea + eb * eb + ec * ec)});
  }
  return cases;
}

}  // namespace oracle
