#include "adr/randomizers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "adr/errors.hpp"

namespace adr {

double g_shift(double x) { return std::exp(x - 1.0); }

std::string_view noise_mode_name(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::AG:
      return "AG";
    case NoiseMode::UAG:
      return "UAG";
    case NoiseMode::M:
      break;
  }
  return "M";
}

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "AG") return NoiseMode::AG;
  if (name == "UAG") return NoiseMode::UAG;
  if (name == "M") return NoiseMode::M;
  throw ConfigError("unknown noise mode '" + std::string(name) + "'");
}

double apply_generic(double x0, const GenericRandomizerSpec& spec, std::span<const double> lambda,
                     RandomSource& rng) {
  if (spec.dim_bias >= lambda.size() || spec.dim_spread >= lambda.size()) {
    throw ContractError("generic randomizer '" + spec.target + "' indexes past lambda");
  }
  const double li = spec.alpha * lambda[spec.dim_bias];
  const double lj = spec.alpha * lambda[spec.dim_spread];
  switch (spec.mode) {
    case NoiseMode::AG:
      return x0 + std::abs(rng.normal(g_shift(li), g_shift(std::abs(lj))));
    case NoiseMode::UAG:
      return x0 + rng.normal(0.0, g_shift(std::abs(li)));
    case NoiseMode::M:
      break;
  }
  return x0 * std::exp(rng.normal(li, std::abs(lj)));
}

namespace {

struct KindInfo {
  CustomKind kind;
  std::string_view name;
  std::size_t arity;
  std::size_t width;
};

constexpr std::array<KindInfo, 10> kKinds{{
    {CustomKind::Friction, "friction", 1, 1},
    {CustomKind::CubeSize, "cube_size", 1, 1},
    {CustomKind::JointLimits, "joint_limits", 1, 1},
    {CustomKind::ActionDelay, "action_delay", 3, 1},
    {CustomKind::ActionLatency, "action_latency", 1, 1},
    {CustomKind::ActionNoise, "action_noise", 3, 1},
    {CustomKind::Backlash, "backlash", 1, 2},
    {CustomKind::Gravity, "gravity", 1, 3},
    {CustomKind::JointMargin, "joint_margin", 1, 1},
    {CustomKind::TimeStep, "time_step", 2, 1},
}};

const KindInfo& info(CustomKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw ConfigError("unknown custom randomizer kind");
}

}  // namespace

std::string_view custom_kind_name(CustomKind kind) { return info(kind).name; }

CustomKind parse_custom_kind(std::string_view name) {
  for (const auto& k : kKinds) {
    if (k.name == name) return k.kind;
  }
  throw ConfigError("unknown custom randomizer kind '" + std::string(name) + "'");
}

std::size_t custom_kind_arity(CustomKind kind) { return info(kind).arity; }
std::size_t custom_kind_width(CustomKind kind) { return info(kind).width; }

void CustomRandomizerSpec::validate(std::size_t lambda_size) const {
  if (kind == CustomKind::Friction && friction_weight != 1.0 && friction_weight != 2.0) {
    throw ConfigError("friction weight must be 1.0 or 2.0");
  }
  if (dims.size() != custom_kind_arity(kind)) {
    throw ConfigError(std::string(custom_kind_name(kind)) + " expects " +
                      std::to_string(custom_kind_arity(kind)) + " lambda indices");
  }
  for (auto d : dims) {
    if (d >= lambda_size) throw ConfigError("randomizer '" + target + "' indexes past lambda");
  }
}

double friction_value(double x0, double weight, double l) {
  if (weight != 1.0 && weight != 2.0) throw ConfigError("friction weight must be 1.0 or 2.0");
  return x0 * std::exp(weight * l);
}

double cube_size_value(double x0, double l) { return x0 * std::exp(0.15 * l); }

double joint_limit_value(double x0, double l, RandomSource& rng) {
  // Second parameter of N(0, 0.1 g(|l|)) is the variance.
  return x0 + rng.normal(0.0, std::sqrt(0.1 * g_shift(std::abs(l))));
}

int latency_support_max(double l) {
  if (!(l > 0.5)) return 0;
  return static_cast<int>(std::ceil(l - 0.5));
}

int sample_latency(double l, RandomSource& rng) {
  const int n = latency_support_max(l);
  return static_cast<int>(rng.index(static_cast<std::size_t>(n) + 1));
}

std::array<double, 3> gravity_value(const std::array<double, 3>& g0, double l, RandomSource& rng) {
  // Normalized Gaussian vector is uniform on the sphere.
  std::array<double, 3> u{};
  double norm = 0.0;
  do {
    for (auto& c : u) c = rng.normal(0.0, 1.0);
    norm = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  } while (norm < 1e-12);
  const double scale = g_shift(l) / norm;
  return {g0[0] + u[0] * scale, g0[1] + u[1] * scale, g0[2] + u[2] * scale};
}

double joint_margin_value(double m0, double l, RandomSource& rng) {
  return m0 * rng.uniform(0.0, 0.15 * g_shift(l));
}

double time_step_value(double t0, double l_scale, double l_jitter, RandomSource& rng) {
  const double kappa = rng.uniform(1250.0, 10000.0);
  const double n = rng.exponential(kappa);  // mean 1/kappa seconds
  return std::exp(0.6 * l_scale) * (t0 + n * std::exp(l_jitter));
}

std::array<double, 2> backlash_value(const std::array<double, 2>& log_defaults, double l,
                                     RandomSource& rng) {
  const double n = rng.normal(1.0, std::abs(l));
  return {std::exp(n * log_defaults[0]), std::exp(n * log_defaults[1])};
}

void ActionNoiseModel::begin_episode(std::size_t size, double l_i, double l_j, RandomSource& rng) {
  n0_.resize(size);
  n1_.resize(size);
  for (std::size_t c = 0; c < size; ++c) {
    n0_[c] = rng.normal(1.0, g_shift(std::abs(l_i)));
    n1_[c] = rng.normal(0.0, g_shift(std::abs(l_j)));
  }
}

double ActionNoiseModel::apply(std::size_t coord, double a0, double l_k, RandomSource& rng) const {
  return a0 * n0_.at(coord) + n1_.at(coord) + rng.normal(0.0, g_shift(std::abs(l_k)));
}

std::vector<double> apply_custom(std::span<const double> x0, const CustomRandomizerSpec& spec,
                                 std::span<const double> lambda, RandomSource& rng) {
  spec.validate(lambda.size());
  if (x0.size() != custom_kind_width(spec.kind)) {
    throw ContractError(std::string(custom_kind_name(spec.kind)) + " expects " +
                        std::to_string(custom_kind_width(spec.kind)) + " default values");
  }
  const auto l = [&](std::size_t k) { return lambda[spec.dims[k]]; };
  switch (spec.kind) {
    case CustomKind::Friction:
      return {friction_value(x0[0], spec.friction_weight, l(0))};
    case CustomKind::CubeSize:
      return {cube_size_value(x0[0], l(0))};
    case CustomKind::JointLimits:
      return {joint_limit_value(x0[0], l(0), rng)};
    case CustomKind::ActionDelay: {
      ActionDelayModel delay;
      delay.begin_episode(l(1), rng);
      return {delay.step(l(0), l(2), rng)};
    }
    case CustomKind::ActionLatency:
      return {static_cast<double>(sample_latency(l(0), rng))};
    case CustomKind::ActionNoise: {
      ActionNoiseModel noise;
      noise.begin_episode(1, l(0), l(1), rng);
      return {noise.apply(0, x0[0], l(2), rng)};
    }
    case CustomKind::Backlash: {
      const auto d = backlash_value({x0[0], x0[1]}, l(0), rng);
      return {d[0], d[1]};
    }
    case CustomKind::Gravity: {
      const auto g = gravity_value({x0[0], x0[1], x0[2]}, l(0), rng);
      return {g[0], g[1], g[2]};
    }
    case CustomKind::JointMargin:
      return {joint_margin_value(x0[0], l(0), rng)};
    case CustomKind::TimeStep:
      return {time_step_value(x0[0], l(0), l(1), rng)};
  }
  throw ConfigError("unknown custom randomizer kind");
}

std::size_t ObservationNoise::begin_index(std::size_t size) const {
  return std::min(spec_.first, size);
}

std::size_t ObservationNoise::end_index(std::size_t size) const {
  const std::size_t b = begin_index(size);
  if (spec_.count == static_cast<std::size_t>(-1)) return size;
  return std::min(size, b + spec_.count);
}

void ObservationNoise::begin_episode(std::span<const double> lambda, std::size_t obs_size,
                                     RandomSource& episode_rng) {
  if (spec_.dim_corr >= lambda.size() || spec_.dim_uncorr >= lambda.size()) {
    throw ContractError("observation noise indexes past lambda");
  }
  const double li = lambda[spec_.dim_corr];
  const std::size_t n = end_index(obs_size) - begin_index(obs_size);
  n0_.resize(n);
  n1_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    n0_[k] = episode_rng.normal(1.0, spec_.a0 * std::exp(li));
    n1_[k] = episode_rng.normal(0.0, spec_.b0 * std::exp(li));
  }
}

void ObservationNoise::apply_in_place(std::span<double> o, std::span<const double> lambda,
                                      RandomSource& step_rng) const {
  const std::size_t b = begin_index(o.size());
  const std::size_t e = end_index(o.size());
  if (e - b != n0_.size()) throw ContractError("observation size changed within an episode");
  const double sigma = spec_.c0 * std::exp(lambda[spec_.dim_uncorr]);
  for (std::size_t k = b; k < e; ++k) {
    o[k] = o[k] * n0_[k - b] + n1_[k - b] + step_rng.normal(0.0, sigma);
  }
}

std::vector<double> ObservationNoise::apply(std::span<const double> o0,
                                            std::span<const double> lambda,
                                            RandomSource& step_rng) const {
  std::vector<double> o(o0.begin(), o0.end());
  apply_in_place(o, lambda, step_rng);
  return o;
}

std::vector<double> apply_observation_noise(std::span<const double> o0,
                                            const ObservationNoiseSpec& spec,
                                            std::span<const double> lambda,
                                            RandomSource& episode_rng, RandomSource& step_rng) {
  ObservationNoise noise(spec);
  noise.begin_episode(lambda, o0.size(), episode_rng);
  return noise.apply(o0, lambda, step_rng);
}

}  // namespace adr
