#pragma once

// Worker roles around the store: rollout and ADR-eval workers, the ADR
// updater (sole phi writer) and the trainer (sole theta writer), run either
// round-robin in one thread or as concurrent actors.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"

#include "adr/adr_core.hpp"
#include "adr/envs.hpp"
#include "adr/errors.hpp"
#include "adr/learner.hpp"
#include "adr/store.hpp"

namespace adr {

enum class WorkerRole { Rollout, AdrEval, Combined, Updater, Trainer };

std::string_view role_name(WorkerRole role);
WorkerRole parse_role(std::string_view name);

/// Thread-safe JSON-lines sink.
class EventLog {
 public:
  void emit(nlohmann::json line);
  std::vector<nlohmann::json> lines() const;
  std::size_t size() const;
  /// One compact JSON object per line.
  void write(std::ostream& out) const;
  std::string text() const;

 private:
  mutable std::mutex mu_;
  std::vector<nlohmann::json> lines_;
};

struct RetryPolicy {
  int attempts = 5;
  std::chrono::milliseconds initial_backoff{20};
  double factor = 2.0;
};

/// Calls `f`, retrying on StoreUnavailable with exponential backoff. The
/// last failure propagates.
template <class F>
auto with_retry(const RetryPolicy& policy, F&& f) -> decltype(f());

/// Runs one episode for a worker: returns (performance, total reward).
struct EpisodeResult {
  double performance = 0.0;
  double reward = 0.0;
};
using EpisodeRunner = std::function<EpisodeResult(std::span<const double> lambda,
                                                  const LearnerSnapshot& theta,
                                                  std::size_t candidate, std::uint64_t seed)>;

/// Runner backed by a fresh environment of `kind` per worker.
EpisodeRunner env_runner(EnvKind kind, const Catalog& catalog, const EpisodeConfig& config);

struct WorkerContext {
  AdrDistribution layout;  // names and calibration used to rebuild phi
  EpisodeRunner runner;
  double boundary_prob = 0.5;  // Combined mode
  bool train_on_eval = true;   // eval episodes also feed the training queue
  RetryPolicy retry;
};

enum class EpisodeKind { Rollout, AdrEval };

struct WorkerEpisode {
  EpisodeKind kind = EpisodeKind::Rollout;
  std::uint64_t phi_version = 0;
  std::uint64_t theta_version = 0;
  std::vector<double> lambda;
  std::optional<BoundarySample> boundary;
  std::size_t candidate = 0;
  EpisodeResult result;
};

/// One worker episode. Returns nullopt while no theta has been published.
/// Throws StoreUnavailable once retries are exhausted.
std::optional<WorkerEpisode> worker_episode(WorkerRole role, Store& store,
                                            const WorkerContext& ctx, Rng& rng);

enum class WorkerExit { Stopped, StoreUnreachable };

/// Loops until `stop` is set or `budget` (shared, decremented per episode)
/// runs out.
WorkerExit worker_loop(WorkerRole role, Store& store, const WorkerContext& ctx, Rng& rng,
                       const std::atomic<bool>& stop, std::atomic<long>& budget,
                       EventLog* log = nullptr);

/// Holds the Algorithm-1 buffers and the local copy of phi.
class Updater {
 public:
  Updater(AdrDistribution initial, AdrConfig config, std::uint64_t version = 0);

  /// Drains the store, applies every record, and publishes one new phi if
  /// anything moved. Records for unknown dimensions are logged and dropped.
  /// Returns the number of records consumed.
  std::size_t step(Store& store, std::uint64_t t, EventLog* log);

  const AdrDistribution& distribution() const noexcept { return dist_; }
  std::uint64_t version() const noexcept { return version_; }
  std::uint64_t consumed() const noexcept { return consumed_; }
  std::uint64_t dropped() const noexcept { return dropped_; }
  const PerformanceBuffers& buffers() const noexcept { return buffers_; }

 private:
  AdrDistribution dist_;
  AdrConfig config_;
  PerformanceBuffers buffers_;
  std::uint64_t version_;
  std::uint64_t consumed_ = 0;
  std::uint64_t dropped_ = 0;
};

/// Collects current-version rollouts and runs the learner once a full batch
/// (population * episodes_per_candidate) is in hand. Stale rollouts are dropped.
class Trainer {
 public:
  Trainer(std::shared_ptr<const Learner> learner, LearnerSnapshot initial,
          std::size_t batch_size);

  /// Publishes the initial snapshot when the store has none.
  void publish_initial(Store& store);
  /// Returns true when a new snapshot was published.
  bool step(Store& store, std::uint64_t t, EventLog* log);

  const LearnerSnapshot& snapshot() const noexcept { return snapshot_; }
  std::uint64_t stale() const noexcept { return stale_; }

 private:
  std::shared_ptr<const Learner> learner_;
  LearnerSnapshot snapshot_;
  std::size_t batch_size_;
  std::vector<Rollout> pending_;
  std::uint64_t stale_ = 0;
};

struct ExperimentConfig {
  EnvKind env = EnvKind::Reacher;
  Catalog catalog;
  EpisodeConfig episode;
  AdrConfig adr;
  LearnerConfig learner;
  bool adr_enabled = true;  // false: phi stays fixed (fixed-DR run)
  std::optional<std::pair<std::vector<double>, std::vector<double>>> initial_bounds;
  WorkerRole worker_role = WorkerRole::Combined;
  std::size_t workers = 1;
  bool train_on_eval = true;
  std::size_t episodes_per_candidate = 1;
  bool reward_tiebreak = true;
  /// Called every `progress_interval` episodes (and at 0) with the episode
  /// count, current phi and theta; deterministic mode only.
  std::size_t progress_interval = 0;
  std::function<void(std::uint64_t, const AdrDistribution&, const LearnerSnapshot&, EventLog&)>
      on_progress;
  /// Overrides the environment runner (tests, stress runs).
  EpisodeRunner runner;
};

AdrDistribution initial_distribution(const ExperimentConfig& config);

struct ExperimentResult {
  AdrDistribution final_phi;
  std::uint64_t phi_version = 0;
  LearnerSnapshot final_theta;
  std::uint64_t episodes = 0;
  StoreCounters counters;
  std::uint64_t eval_episodes = 0;
  std::uint64_t stale_rollouts = 0;
};

/// Single-threaded round robin: worker w = episode % workers runs one
/// episode, then the updater and trainer each take one step. All randomness
/// comes from streams derived from `seed`, so equal inputs give
/// byte-identical logs. With zero episodes the log holds only the initial phi.
ExperimentResult run_deterministic(const ExperimentConfig& config, std::uint64_t seed,
                                   std::uint64_t total_episodes, EventLog& log);

/// Worker threads plus an updater thread and a trainer thread sharing
/// `store` (in-process when null). Results depend on scheduling.
ExperimentResult run_concurrent(const ExperimentConfig& config, std::uint64_t seed,
                                std::uint64_t total_episodes, EventLog& log,
                                Store* store = nullptr);

// ---------------------------------------------------------------------------

template <class F>
auto with_retry(const RetryPolicy& policy, F&& f) -> decltype(f()) {
  auto wait = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return f();
    } catch (const StoreUnavailable&) {
      if (attempt >= policy.attempts) throw;
      std::this_thread::sleep_for(wait);
      wait = std::chrono::milliseconds(
          static_cast<long>(static_cast<double>(wait.count()) * policy.factor));
    }
  }
}

}  // namespace adr
