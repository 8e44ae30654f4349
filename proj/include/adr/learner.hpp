#pragma once

// Cross-entropy-method search over a linear policy with an optional
// exponential trace memory.
//
// Policy input is x = [o, trace, 1]; action = clip(W x) with W stored row
// major (act_dim rows). The trace has obs_dim + act_dim entries and follows
//   trace <- decay * trace + (1 - decay) * [o, a]
// after every action. With memory disabled the trace is empty.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "adr/envs.hpp"

namespace adr {

struct LearnerConfig {
  std::size_t obs_dim = 0;
  std::size_t act_dim = 0;
  bool memory = true;
  double decay = 0.9;
  std::size_t population = 64;
  double elite_fraction = 0.2;
  double init_std = 0.5;
  double std_floor = 0.02;
  std::uint64_t seed = 0;  // candidate sampling stream

  void validate() const;
  std::size_t trace_size() const { return memory ? obs_dim + act_dim : 0; }
  std::size_t input_size() const { return obs_dim + trace_size() + 1; }
  std::size_t parameter_count() const { return act_dim * input_size(); }
};

/// Immutable published policy distribution. `parameters` is the CEM mean and
/// is the policy used for evaluation; `stddev` is the per-parameter spread
/// candidates are drawn from.
struct LearnerSnapshot {
  std::uint64_t version = 0;
  LearnerConfig config;
  std::vector<double> parameters;
  std::vector<double> stddev;
};

struct MemoryState {
  std::vector<double> trace;
};

MemoryState initial_memory(const LearnerConfig& config);
/// Zeroes the trace in place.
void reset_memory(MemoryState& memory);

/// Pure policy step. Throws ContractError on an observation or parameter
/// size mismatch.
std::vector<double> act(const LearnerConfig& config, std::span<const double> parameters,
                        MemoryState& memory, std::span<const double> observation);
std::vector<double> act(const LearnerSnapshot& snapshot, MemoryState& memory,
                        std::span<const double> observation);

/// Parameters of candidate `k` for `snapshot`: mean + stddev * z, where z is
/// drawn from a stream derived from (config.seed, version, k).
std::vector<double> candidate_parameters(const LearnerSnapshot& snapshot, std::size_t k);

/// One finished training episode.
struct Rollout {
  std::uint64_t version = 0;
  std::size_t candidate = 0;
  std::vector<double> lambda;
  std::uint64_t seed = 0;
  double performance = 0.0;
  double reward = 0.0;  // tie-break only
};

nlohmann::json to_json(const Rollout& r);
Rollout rollout_from_json(const nlohmann::json& j);

struct EliteSelection {
  std::vector<std::size_t> candidates;  // elite candidate ids
  std::size_t evaluated = 0;            // distinct candidates in the batch
};

/// Ranks candidates by mean performance, then by mean reward when
/// `reward_tiebreak` is set. Keeps the top fraction; every candidate tied
/// with the last elite is kept as well.
EliteSelection select_elites(std::span<const Rollout> batch, double elite_fraction,
                             bool reward_tiebreak = true);

class Learner {
 public:
  virtual ~Learner() = default;
  virtual LearnerSnapshot initial() const = 0;
  /// New snapshot with version + 1. Rollouts from other versions are
  /// ignored; throws ContractError if none match.
  virtual LearnerSnapshot update(const LearnerSnapshot& snapshot,
                                 std::span<const Rollout> batch) const = 0;
};

class CemLearner final : public Learner {
 public:
  explicit CemLearner(LearnerConfig config, bool reward_tiebreak = true);

  LearnerSnapshot initial() const override;
  LearnerSnapshot update(const LearnerSnapshot& snapshot,
                         std::span<const Rollout> batch) const override;
  const LearnerConfig& config() const noexcept { return config_; }

 private:
  LearnerConfig config_;
  bool reward_tiebreak_;
};

/// Runs one fixed parameter vector with its own memory.
class PolicyController final : public Controller {
 public:
  PolicyController(LearnerConfig config, std::vector<double> parameters);
  PolicyController(const LearnerSnapshot& snapshot, std::size_t candidate);
  explicit PolicyController(const LearnerSnapshot& snapshot);

  void reset() override { reset_memory(memory_); }
  std::vector<double> act(std::span<const double> observation) override;

  MemoryState& memory() noexcept { return memory_; }
  const std::vector<double>& parameters() const noexcept { return parameters_; }

 private:
  LearnerConfig config_;
  std::vector<double> parameters_;
  MemoryState memory_;
};

LearnerConfig learner_config_for(const Environment& env, bool memory = true);

/// Text snapshot record:
///   {"format": "adr-cem-snapshot", "version": v, "config": {...},
///    "parameters": [...], "stddev": [...]}
/// Doubles round-trip exactly.
nlohmann::json to_json(const LearnerSnapshot& s);
LearnerSnapshot learner_snapshot_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LearnerConfig& c);
LearnerConfig learner_config_from_json(const nlohmann::json& j);

}  // namespace adr
