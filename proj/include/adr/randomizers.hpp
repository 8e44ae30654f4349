#pragma once

// Maps sampled lambda values onto environment parameters: the generic noise
// modes, the custom physics formulas, and observation noise.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adr/random.hpp"

namespace adr {

/// exp(x - 1). Scale convention shared by most randomizer formulas.
double g_shift(double x);

enum class NoiseMode { AG, UAG, M };

std::string_view noise_mode_name(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view name);

struct GenericRandomizerSpec {
  std::string target;
  NoiseMode mode = NoiseMode::M;
  double alpha = 1.0;
  std::size_t dim_bias = 0;    // lambda_i
  std::size_t dim_spread = 0;  // lambda_j
};

/// AG:  x0 + |N|,  N ~ Normal(g(a*l_i), g(|a*l_j|)^2)
/// UAG: x0 + N,    N ~ Normal(0, g(|a*l_i|)^2)
/// M:   x0 * e^N,  N ~ Normal(a*l_i, |a*l_j|^2)
double apply_generic(double x0, const GenericRandomizerSpec& spec, std::span<const double> lambda,
                     RandomSource& rng);

enum class CustomKind {
  Friction,
  CubeSize,
  JointLimits,
  ActionDelay,
  ActionLatency,
  ActionNoise,
  Backlash,
  Gravity,
  JointMargin,
  TimeStep,
};

std::string_view custom_kind_name(CustomKind kind);
CustomKind parse_custom_kind(std::string_view name);

/// Number of lambda indices each custom formula reads.
std::size_t custom_kind_arity(CustomKind kind);

/// Number of default values (x0 components) each custom formula transforms.
std::size_t custom_kind_width(CustomKind kind);

struct CustomRandomizerSpec {
  CustomKind kind = CustomKind::Friction;
  std::string target;
  std::vector<std::size_t> dims;
  double friction_weight = 1.0;  // only read by Friction; must be 1.0 or 2.0

  /// Throws ConfigError on a bad friction weight, wrong arity, or an index
  /// outside a lambda vector of `lambda_size` entries.
  void validate(std::size_t lambda_size) const;
};

// Closed forms, one per custom kind. `l*` are lambda values.

double friction_value(double x0, double weight, double l);
double cube_size_value(double x0, double l);
double joint_limit_value(double x0, double l, RandomSource& rng);       // x0 + N(0, 0.1 g(|l|))
int latency_support_max(double l);                                      // upper end of {0..n}
int sample_latency(double l, RandomSource& rng);
std::array<double, 3> gravity_value(const std::array<double, 3>& g0, double l, RandomSource& rng);
double joint_margin_value(double m0, double l, RandomSource& rng);
double time_step_value(double t0, double l_scale, double l_jitter, RandomSource& rng);

/// Backlash magnitudes (delta_+1, delta_-1) = e^{n * log_default} with
/// n ~ Normal(1, l^2); `log_defaults` holds the log of the default magnitudes.
std::array<double, 2> backlash_value(const std::array<double, 2>& log_defaults, double l,
                                     RandomSource& rng);

/// Action delay in milliseconds, d = |l_i| n0 n1; n0 is drawn once per
/// episode, n1 on every step.
class ActionDelayModel {
 public:
  void begin_episode(double l_j, RandomSource& rng) { n0_ = rng.normal(1.0, std::abs(l_j)); }
  double step(double l_i, double l_k, RandomSource& rng) const {
    return std::abs(l_i) * n0_ * rng.normal(1.0, std::abs(l_k));
  }
  double episode_factor() const noexcept { return n0_; }

 private:
  double n0_ = 1.0;
};

/// Action noise a = a0 n0 + n1 + n2 per action coordinate; n0 and n1 are
/// drawn once per episode, n2 on every step.
class ActionNoiseModel {
 public:
  void begin_episode(std::size_t size, double l_i, double l_j, RandomSource& rng);
  double apply(std::size_t coord, double a0, double l_k, RandomSource& rng) const;
  const std::vector<double>& scale() const noexcept { return n0_; }
  const std::vector<double>& offset() const noexcept { return n1_; }

 private:
  std::vector<double> n0_;
  std::vector<double> n1_;
};

/// Evaluates one custom randomizer in a single shot. Episode-level draws
/// (delay n0, noise n0/n1) are made fresh on every call; environments that
/// need them held for an episode use the model classes above.
///
/// `x0` has `custom_kind_width(kind)` entries: 3 for Gravity, 2 for Backlash
/// (log defaults), 1 otherwise. ActionDelay ignores x0 and ActionLatency
/// returns the latency in steps.
std::vector<double> apply_custom(std::span<const double> x0, const CustomRandomizerSpec& spec,
                                 std::span<const double> lambda, RandomSource& rng);

struct ObservationNoiseSpec {
  double a0 = 0.01;
  double b0 = 0.01;
  double c0 = 0.01;
  std::size_t dim_corr = 0;    // lambda_i
  std::size_t dim_uncorr = 0;  // lambda_j
  std::size_t first = 0;       // first observation element covered
  std::size_t count = static_cast<std::size_t>(-1);  // elements covered; -1 for the rest
};

/// o = o0 n0 + n1 + n2 with n0 ~ Normal(1, (a0 e^{l_i})^2) and
/// n1 ~ Normal(0, (b0 e^{l_i})^2) fixed for the episode, and
/// n2 ~ Normal(0, (c0 e^{l_j})^2) drawn per step.
class ObservationNoise {
 public:
  ObservationNoise() = default;
  explicit ObservationNoise(ObservationNoiseSpec spec) : spec_(spec) {}

  void begin_episode(std::span<const double> lambda, std::size_t obs_size,
                     RandomSource& episode_rng);
  std::vector<double> apply(std::span<const double> o0, std::span<const double> lambda,
                            RandomSource& step_rng) const;
  void apply_in_place(std::span<double> o, std::span<const double> lambda,
                      RandomSource& step_rng) const;

  const ObservationNoiseSpec& spec() const noexcept { return spec_; }
  const std::vector<double>& episode_scale() const noexcept { return n0_; }
  const std::vector<double>& episode_offset() const noexcept { return n1_; }

 private:
  std::size_t begin_index(std::size_t size) const;
  std::size_t end_index(std::size_t size) const;

  ObservationNoiseSpec spec_;
  std::vector<double> n0_;
  std::vector<double> n1_;
};

/// Free-function form: draws the episode components from `episode_rng` and
/// the per-step component from `step_rng`.
std::vector<double> apply_observation_noise(std::span<const double> o0,
                                            const ObservationNoiseSpec& spec,
                                            std::span<const double> lambda,
                                            RandomSource& episode_rng, RandomSource& step_rng);

}  // namespace adr
