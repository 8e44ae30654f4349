#pragma once

// Randomized toy environments following the consecutive-success episode
// protocol: distance-delta reward, +5 per goal, -20 on a drop, per-goal
// timeout. Actions pass through latency, backlash, action noise and the
// random network adversary before reaching the dynamics.

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adr/catalog.hpp"
#include "adr/cube.hpp"
#include "adr/random.hpp"
#include "adr/randomizers.hpp"
#include "adr/rna.hpp"

namespace adr {

enum class EnvKind { Reacher, CubeOps };

std::string_view env_kind_name(EnvKind kind);
EnvKind parse_env_kind(std::string_view name);

struct EpisodeConfig {
  int max_consecutive_successes = 50;
  int timeout_steps = 400;  // per goal
  double reward_success = 5.0;
  double reward_drop = -20.0;
  double success_tolerance = 0.05;
  double step_seconds = 0.08;  // reported simulated time per step

  void validate() const;
  static EpisodeConfig defaults_for(EnvKind kind);
};

struct Events {
  bool goal_achieved = false;
  bool dropped = false;
  bool timed_out = false;
  bool episode_end = false;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  Events events;
};

enum class Termination { Completed50, Dropped, TimedOut };

std::string_view termination_name(Termination t);
Termination parse_termination(std::string_view name);

struct SuccessEvent {
  int index = 0;       // 1-based
  double time = 0.0;   // simulated seconds since the episode began
  std::optional<cube::SubgoalKind> kind;
};

struct TrialRecord {
  std::string env;
  std::vector<double> lambda;
  std::uint64_t seed = 0;
  std::vector<SuccessEvent> successes;
  Termination termination = Termination::TimedOut;
  long steps = 0;

  int performance() const { return static_cast<int>(successes.size()); }
};

nlohmann::json to_json(const TrialRecord& r);
TrialRecord trial_record_from_json(const nlohmann::json& j);

/// Anything that maps observations to actions and may carry memory.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset() = 0;
  virtual std::vector<double> act(std::span<const double> observation) = 0;
};

/// Latency queue, backlash, action noise and adversary blending. Each stage
/// is active only when the catalog holds the matching randomizer.
class ActionPipeline {
 public:
  /// `noise_unit` is the physical quantity one unit of normalized action
  /// stands for; action noise is drawn in physical units.
  void configure(const Catalog& catalog, std::size_t action_size, std::size_t obs_size,
                 double noise_unit = 1.0);
  void begin_episode(std::span<const double> lambda, RandomSource& rng);
  /// Raw controller action plus the adversary's observation in, corrupted
  /// action out, clipped to [-1, 1].
  std::vector<double> apply(std::span<const double> action, std::span<const double> adversary_obs,
                            RandomSource& step_rng);

  int latency() const noexcept { return latency_; }
  std::array<double, 2> backlash() const noexcept { return backlash_; }
  double rna_alpha() const noexcept { return alpha_; }
  double rna_beta() const noexcept { return beta_; }
  const RnaNetwork* wrench_network() const noexcept {
    return wrench_net_ ? &*wrench_net_ : nullptr;
  }

 private:
  std::size_t action_size_ = 0;
  std::size_t obs_size_ = 0;
  double noise_unit_ = 1.0;
  const RandomizerEntry* latency_entry_ = nullptr;
  const RandomizerEntry* backlash_entry_ = nullptr;
  const RandomizerEntry* noise_entry_ = nullptr;
  const RandomizerEntry* rna_entry_ = nullptr;
  std::array<double, 2> backlash_log_defaults_{};

  std::vector<double> lambda_;
  int latency_ = 0;
  std::deque<std::vector<double>> queue_;
  std::array<double, 2> backlash_{};
  std::vector<double> play_;
  ActionNoiseModel noise_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::optional<RnaNetwork> action_net_;
  std::optional<RnaNetwork> wrench_net_;
};

class Environment {
 public:
  Environment(Catalog catalog, EpisodeConfig config);
  virtual ~Environment() = default;
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  virtual EnvKind kind() const = 0;
  virtual std::size_t observation_size() const = 0;
  virtual std::size_t action_size() const = 0;

  /// Samples every per-episode randomization and the first goal. Throws
  /// ContractError if `lambda` does not match the catalog.
  std::vector<double> reset(std::span<const double> lambda, std::uint64_t seed);

  /// Throws ContractError on a wrong-sized or non-finite action, or when
  /// the episode has already ended.
  StepResult step(std::span<const double> action);

  /// Redraws the per-episode randomizations for `lambda`, keeping the
  /// system state, goal and success count.
  void resample_dynamics(std::span<const double> lambda);

  /// Forces one more action coordinate to zero from now on; nullopt
  /// restores all of them.
  void break_action(std::optional<std::size_t> coord);
  const std::vector<std::size_t>& broken_actions() const noexcept { return broken_; }

  const Catalog& catalog() const noexcept { return catalog_; }
  const EpisodeConfig& config() const noexcept { return config_; }
  const std::vector<double>& lambda() const noexcept { return lambda_; }
  int successes() const noexcept { return successes_; }
  long steps() const noexcept { return steps_; }
  double sim_time() const noexcept { return static_cast<double>(steps_) * config_.step_seconds; }
  bool done() const noexcept { return done_; }
  const ActionPipeline& pipeline() const noexcept { return pipeline_; }

  /// Kind of the goal currently pursued; empty for environments without subgoal kinds.
  virtual std::optional<cube::SubgoalKind> goal_kind() const { return std::nullopt; }
  /// Current distance of the system state from the goal.
  virtual double goal_distance() const = 0;

 protected:
  // Subclasses pull their physical parameters from the catalog here.
  virtual void sample_dynamics(std::span<const double> lambda, Rng& rng) = 0;
  virtual void reset_state(Rng& rng) = 0;
  virtual void integrate(std::span<const double> action, Rng& step_rng) = 0;
  virtual bool goal_achieved() const = 0;
  virtual bool dropped() const = 0;
  virtual void next_goal(Rng& rng) = 0;
  virtual std::vector<double> true_observation() const = 0;
  /// Targets the subclass reads beyond the pipeline ones.
  virtual bool accepts_target(std::string_view target) const = 0;

  void check_targets() const;

  /// Value of a generic or single-output custom randomizer, or `x0` when
  /// the catalog has no randomizer for the target.
  double param(std::string_view target, double x0, std::span<const double> lambda,
               RandomSource& rng) const;

  Catalog catalog_;
  EpisodeConfig config_;
  ActionPipeline pipeline_;

 private:
  std::vector<double> observe(Rng& step_rng);

  std::optional<ObservationNoise> obs_noise_;
  std::vector<double> lambda_;
  Rng episode_rng_{0};
  Rng step_rng_{0};
  Rng goal_rng_{0};
  std::uint64_t seed_ = 0;
  std::uint64_t resamples_ = 0;
  std::vector<std::size_t> broken_;
  int successes_ = 0;
  int steps_since_goal_ = 0;
  long steps_ = 0;
  double last_distance_ = 0.0;
  bool done_ = true;
};

/// Point mass in [-1, 1]^2 steered by velocity commands toward random targets.
/// Observation: target minus position. Leaving |p|_inf <= 1.5 is a drop.
class ReacherEnv final : public Environment {
 public:
  ReacherEnv(Catalog catalog, EpisodeConfig config);

  EnvKind kind() const override { return EnvKind::Reacher; }
  std::size_t observation_size() const override { return 2; }
  std::size_t action_size() const override { return 2; }
  double goal_distance() const override;

  static constexpr double kStepLength = 0.1;  // displacement per unit action and unit gain
  static constexpr double kDropBound = 1.5;

  const std::array<double, 2>& position() const noexcept { return pos_; }
  const std::array<double, 2>& target() const noexcept { return target_; }
  const std::array<double, 2>& gain() const noexcept { return gain_; }

 protected:
  void sample_dynamics(std::span<const double> lambda, Rng& rng) override;
  void reset_state(Rng& rng) override;
  void integrate(std::span<const double> action, Rng& step_rng) override;
  bool goal_achieved() const override;
  bool dropped() const override;
  void next_goal(Rng& rng) override;
  std::vector<double> true_observation() const override;
  bool accepts_target(std::string_view target) const override;

 private:
  std::array<double, 2> pos_{};
  std::array<double, 2> target_{};
  std::array<double, 2> gain_{1.0, 1.0};
};

/// Kinematic Rubik's cube held in a hand. The action commands a world-frame
/// angular velocity (3) and the top face's angular velocity (1). Goals come
/// from the cube goal generator. A grip-stability scalar decays with gravity
/// tilt, adversary forces and overspeed; below zero the cube is dropped.
///
/// Observation: orientation error (axis times angle, world frame, 3), top
/// face angle error, grip, rotation-goal flag, up-face deviation.
class CubeOpsEnv final : public Environment {
 public:
  CubeOpsEnv(Catalog catalog, EpisodeConfig config);

  EnvKind kind() const override { return EnvKind::CubeOps; }
  std::size_t observation_size() const override { return 7; }
  std::size_t action_size() const override { return 4; }
  double goal_distance() const override;
  std::optional<cube::SubgoalKind> goal_kind() const override;

  static constexpr double kMaxAngularSpeed = 3.0;  // rad/s at unit action
  static constexpr double kMaxFaceSpeed = 3.0;
  static constexpr double kGravity = 9.81;

  const cube::CubeState& state() const noexcept { return state_; }
  const cube::Goal& goal() const noexcept { return goal_; }
  double grip() const noexcept { return grip_; }
  double dt() const noexcept { return dt_; }

 protected:
  void sample_dynamics(std::span<const double> lambda, Rng& rng) override;
  void reset_state(Rng& rng) override;
  void integrate(std::span<const double> action, Rng& step_rng) override;
  bool goal_achieved() const override;
  bool dropped() const override;
  void next_goal(Rng& rng) override;
  std::vector<double> true_observation() const override;
  bool accepts_target(std::string_view target) const override;

 private:
  Eigen::Vector3d orientation_error() const;
  double face_error() const;

  cube::CubeState state_;
  cube::Goal goal_;
  std::size_t goal_face_ = 0;
  std::size_t active_face_ = 0;
  double grip_ = 1.0;
  double size_ = 1.0;
  double friction_ = 1.0;
  double dt_ = 0.08;
  std::array<double, 3> gravity_{0.0, 0.0, -kGravity};
};

/// Default catalog for each environment kind.
Catalog default_catalog(EnvKind kind);

/// Catalog with every randomizer removed except those listed; used for the
/// noiseless Reacher preset.
Catalog noiseless_reacher_catalog();

std::unique_ptr<Environment> make_env(EnvKind kind, Catalog catalog, EpisodeConfig config);

/// Optional hook run once with index 0 right after reset, then after each
/// non-final success before the next step; the harness uses it for
/// perturbations.
using SuccessHook = std::function<void(int success_index, Environment& env, Controller& ctl)>;

struct EpisodeOutcome {
  int performance = 0;
  TrialRecord record;
  double total_reward = 0.0;
};

/// Resets `env` and `controller`, then steps until the episode ends.
EpisodeOutcome run_episode(Environment& env, std::span<const double> lambda,
                           Controller& controller, std::uint64_t seed,
                           const SuccessHook& hook = {});

/// Proportional controllers that solve the zero-randomization tasks.
class ScriptedReacher final : public Controller {
 public:
  explicit ScriptedReacher(double gain = 10.0) : gain_(gain) {}
  void reset() override {}
  std::vector<double> act(std::span<const double> observation) override;

 private:
  double gain_;
};

class ScriptedCube final : public Controller {
 public:
  explicit ScriptedCube(double gain = 3.0, double face_gain = 4.0)
      : gain_(gain), face_gain_(face_gain) {}
  void reset() override {}
  std::vector<double> act(std::span<const double> observation) override;

 private:
  double gain_;
  double face_gain_;
};

/// Does nothing.
class IdleController final : public Controller {
 public:
  explicit IdleController(std::size_t action_size) : n_(action_size) {}
  void reset() override {}
  std::vector<double> act(std::span<const double>) override { return std::vector<double>(n_, 0.0); }

 private:
  std::size_t n_;
};

}  // namespace adr
