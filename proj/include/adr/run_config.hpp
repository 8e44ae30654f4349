#pragma once

// The run configuration file: one JSON object. Unknown keys are rejected.
//
//   env                 "reacher" | "cube_ops"
//   catalog             "default" | "noiseless" | catalog object
//   episode             {max_consecutive_successes, timeout_steps, reward_success,
//                        reward_drop, success_tolerance, step_seconds}
//   adr                 {step_size, threshold_low, threshold_high, buffer_size,
//                        boundary_prob, phi_max}
//   learner             {memory, decay, population, elite_fraction, init_std,
//                        std_floor, reward_tiebreak, episodes_per_candidate}
//   run                 {seeds, episodes, mode: "deterministic"|"concurrent"|"socket",
//                        workers, worker_role, train_on_eval, initial_low, initial_high}
//   eval                {interval, episodes, seed, held_out_low, held_out_high,
//                        held_out_width}
//   curriculum          {snapshots: {name: fraction}, threshold_fraction, threshold}
//   perturbation        {kinds, triggers, trials, threads, policy, lambda_low, lambda_high}
//
// Every section and key is optional; missing values take the defaults.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "adr/distributed.hpp"
#include "adr/harness.hpp"

namespace adr {

using Bounds = std::pair<std::vector<double>, std::vector<double>>;

enum class RunMode { Deterministic, Concurrent, Socket };

struct RunConfig {
  EnvKind env = EnvKind::Reacher;
  Catalog catalog = default_catalog(EnvKind::Reacher);
  nlohmann::json catalog_source = "default";
  EpisodeConfig episode = EpisodeConfig::defaults_for(EnvKind::Reacher);
  AdrConfig adr;

  bool memory = true;
  double decay = 0.9;
  std::size_t population = 64;
  double elite_fraction = 0.2;
  double init_std = 0.5;
  double std_floor = 0.02;
  bool reward_tiebreak = true;
  std::size_t episodes_per_candidate = 1;

  std::vector<std::uint64_t> seeds{0};
  std::uint64_t episodes = 10000;
  RunMode mode = RunMode::Deterministic;
  std::size_t workers = 1;
  WorkerRole worker_role = WorkerRole::Combined;
  bool train_on_eval = true;
  std::optional<Bounds> initial_bounds;

  std::uint64_t eval_interval = 64;
  std::size_t eval_episodes = 50;
  std::uint64_t eval_seed = 777;
  std::optional<Bounds> held_out;
  double held_out_width = 0.5;  // U(calib - w, calib + w) when no bounds are given

  std::vector<std::pair<std::string, double>> snapshots{
      {"small", 0.25}, {"medium", 0.5}, {"large", 0.75}, {"xl", 1.0}};
  double threshold_fraction = 0.8;
  std::optional<double> threshold;

  std::vector<PerturbationKind> perturbation_kinds{PerturbationKind::ResetMemory,
                                                   PerturbationKind::ResampleDynamics,
                                                   PerturbationKind::BreakJoint};
  std::vector<int> triggers{10, 30};
  std::size_t trials = 200;
  std::size_t threads = 1;
  std::string policy = "scripted";  // "scripted", "idle" or a snapshot file
  std::optional<Bounds> perturbation_lambda;

  /// Throws ConfigError on unknown keys, wrong types or invalid values.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  LearnerConfig learner_config() const;
  ExperimentConfig experiment() const;
  AdrDistribution held_out_distribution() const;
  CurriculumConfig curriculum() const;
  PerturbationConfig perturbation(PerturbationKind kind, std::uint64_t seed) const;
  /// Controllers for the perturbation study, from `policy`.
  ControllerFactory controllers() const;
  /// perturbation.lambda bounds, or the calibration point.
  AdrDistribution perturbation_distribution() const;
};

std::string_view run_mode_name(RunMode mode);
RunMode parse_run_mode(std::string_view name);

/// The toy comparison used by the acceptance check: Reacher with a 50-step
/// per-goal timeout, ADR step 0.05 over buffers of 10, 10^4 episodes per run,
/// evaluated every 64 episodes on U(-0.5, 0.5) in every dimension.
RunConfig reacher_curriculum_preset();

}  // namespace adr
