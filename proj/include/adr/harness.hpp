#pragma once

// Experiments on top of the training loop: the ADR-versus-fixed-DR
// curriculum comparison and the mid-episode perturbation study, plus the
// per-success-index statistics both report.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adr/adr_core.hpp"
#include "adr/distributed.hpp"
#include "adr/envs.hpp"
#include "adr/learner.hpp"

namespace adr {

enum class PerturbationKind { ResetMemory, ResampleDynamics, BreakJoint };

std::string_view perturbation_name(PerturbationKind kind);  // "reset_memory", ...
PerturbationKind parse_perturbation(std::string_view name);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::ResetMemory;
  std::vector<int> triggers{10, 30};  // fire after these success counts

  /// Throws ConfigError unless triggers are >= 1, strictly increasing and
  /// below `max_successes`.
  void validate(int max_successes = 50) const;
};

/// Per success index i = 1..n (n = max consecutive successes):
///  - time statistics use only trials that completed all n goals; the time
///    of index i is the gap between success i and success i-1 (0 for i = 1);
///  - every other trial fails at index performance + 1. Failure probability
///    is failures / trials alive at i (trials with at least i-1 successes).
struct SuccessIndexStats {
  int max_index = 50;
  std::size_t trials = 0;
  std::size_t completed = 0;
  std::vector<double> mean_time;     // NaN without completed trials
  std::vector<double> stderr_time;   // sample sd / sqrt(n); NaN for n < 2
  std::vector<std::size_t> alive;
  std::vector<std::size_t> failed;
  std::vector<double> failure_prob;  // NaN where nobody is alive

  double completion_fraction() const;
  /// Product of (1 - failure_prob) over indices with trials alive.
  double survival_product() const;
};

/// Throws DataError for records inconsistent with `max_index` (a completed
/// trial without exactly that many successes, more successes than allowed,
/// or decreasing success times).
SuccessIndexStats success_index_stats(std::span<const TrialRecord> records, int max_index = 50);

inline constexpr std::string_view kFailureDenominator =
    "trials alive at the index (conditional hazard)";

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

struct PerturbationConfig {
  EnvKind env = EnvKind::CubeOps;
  Catalog catalog;
  EpisodeConfig episode;
  PerturbationSpec spec;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct PerturbationTrial {
  TrialRecord record;
  std::vector<int> fired;             // success indices at which the hook applied
  std::vector<std::size_t> broken;    // action coordinates broken, in order
};

struct PerturbationSeries {
  std::string name;  // "perturbed", "baseline", "broken_from_start"
  std::vector<PerturbationTrial> trials;
  SuccessIndexStats stats;

  std::vector<TrialRecord> records() const;
};

struct PerturbationReport {
  PerturbationSpec spec;
  std::vector<PerturbationSeries> series;

  const PerturbationSeries* find(std::string_view name) const;
  nlohmann::json metadata() const;
};

/// Trial i draws lambda from `lambdas` and its episode seed from stream i of
/// `seed`; every series replays the same (lambda, seed) pairs, so they differ
/// only by the perturbation. Trials run on `threads` workers and are reduced
/// in trial order, so the report does not depend on the thread count.
///
/// ResetMemory calls Controller::reset. ResampleDynamics draws a fresh lambda
/// from `lambdas` and keeps state, goal and memory. BreakJoint zeroes one more
/// uniformly chosen working action coordinate for the rest of the trial.
/// BreakJoint also runs a series with one coordinate broken from the start.
PerturbationReport run_perturbation_experiment(const PerturbationConfig& config,
                                               const ControllerFactory& controllers,
                                               const AdrDistribution& lambdas);

// ---------------------------------------------------------------------------
// Curriculum comparison.

struct CurriculumConfig {
  ExperimentConfig experiment;  // env, catalog, ADR and learner settings
  std::uint64_t budget = 10000;            // episodes per run
  std::uint64_t eval_interval = 64;
  std::size_t eval_episodes = 50;
  std::uint64_t eval_seed = 777;
  AdrDistribution held_out;                // fixed evaluation distribution
  /// Fixed-DR runs train on the ADR boundaries reached at these fractions of
  /// the budget.
  std::vector<std::pair<std::string, double>> snapshots{
      {"small", 0.25}, {"medium", 0.5}, {"large", 0.75}, {"xl", 1.0}};
  double threshold_fraction = 0.8;  // of the ADR run's final eval
  std::optional<double> threshold;  // overrides the fraction when set

  void validate() const;
};

struct CurvePoint {
  std::uint64_t episodes = 0;
  double eval = 0.0;
  double entropy = 0.0;
};

struct CurriculumRun {
  std::string name;  // "adr" or a snapshot name
  bool adr = false;
  AdrDistribution phi;  // training range: final for ADR, fixed otherwise
  std::vector<CurvePoint> curve;
  std::optional<std::uint64_t> episodes_to_threshold;
};

struct CurriculumReport {
  std::uint64_t seed = 0;
  double threshold = 0.0;
  std::vector<CurriculumRun> runs;

  const CurriculumRun& run(std::string_view name) const;
  /// True when the ADR run reached the threshold strictly earlier than
  /// `name`; a run that never reaches it counts as infinitely late.
  bool adr_faster_than(std::string_view name) const;
  nlohmann::json to_json() const;
};

/// Mean performance of the snapshot's mean policy over `episodes` lambdas
/// drawn from `held_out` with a fixed seed.
double evaluate_policy(const ExperimentConfig& experiment, const LearnerSnapshot& theta,
                       const AdrDistribution& held_out, std::size_t episodes,
                       std::uint64_t seed);

CurriculumReport run_curriculum_comparison(const CurriculumConfig& config, std::uint64_t seed);

}  // namespace adr
