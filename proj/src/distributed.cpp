#include "adr/distributed.hpp"

#include <ostream>
#include <sstream>
#include <thread>

namespace adr {

std::string_view role_name(WorkerRole role) {
  switch (role) {
    case WorkerRole::Rollout: return "rollout";
    case WorkerRole::AdrEval: return "adr_eval";
    case WorkerRole::Combined: return "combined";
    case WorkerRole::Updater: return "updater";
    case WorkerRole::Trainer: return "trainer";
  }
  return "?";
}

WorkerRole parse_role(std::string_view name) {
  for (auto r : {WorkerRole::Rollout, WorkerRole::AdrEval, WorkerRole::Combined,
                 WorkerRole::Updater, WorkerRole::Trainer}) {
    if (role_name(r) == name) return r;
  }
  throw ConfigError("unknown worker role '" + std::string(name) + "'");
}

void EventLog::emit(nlohmann::json line) {
  std::lock_guard lock(mu_);
  lines_.push_back(std::move(line));
}

std::vector<nlohmann::json> EventLog::lines() const {
  std::lock_guard lock(mu_);
  return lines_;
}

std::size_t EventLog::size() const {
  std::lock_guard lock(mu_);
  return lines_.size();
}

void EventLog::write(std::ostream& out) const {
  std::lock_guard lock(mu_);
  for (const auto& l : lines_) out << l.dump() << '\n';
}

std::string EventLog::text() const {
  std::ostringstream s;
  write(s);
  return s.str();
}

EpisodeRunner env_runner(EnvKind kind, const Catalog& catalog, const EpisodeConfig& config) {
  std::shared_ptr<Environment> env = make_env(kind, catalog, config);
  return [env](std::span<const double> lambda, const LearnerSnapshot& theta,
               std::size_t candidate, std::uint64_t seed) {
    PolicyController policy(theta, candidate);
    const auto out = run_episode(*env, lambda, policy, seed);
    return EpisodeResult{static_cast<double>(out.performance), out.total_reward};
  };
}

std::optional<WorkerEpisode> worker_episode(WorkerRole role, Store& store,
                                            const WorkerContext& ctx, Rng& rng) {
  if (role == WorkerRole::Updater || role == WorkerRole::Trainer) {
    throw ContractError("worker_episode needs an episode-running role");
  }
  const auto theta = with_retry(ctx.retry, [&] { return store.get_theta(); });
  if (!theta) return std::nullopt;
  const auto phi = with_retry(ctx.retry, [&] { return store.get_phi(); });
  const auto dist = distribution_from_snapshot(ctx.layout, phi);

  WorkerEpisode ep;
  ep.phi_version = phi.version;
  ep.theta_version = theta->version;
  bool eval = role == WorkerRole::AdrEval;
  if (role == WorkerRole::Combined) eval = rng.coin(ctx.boundary_prob);
  if (eval) {
    ep.kind = EpisodeKind::AdrEval;
    ep.boundary = boundary_sample(dist, rng);
    ep.lambda = ep.boundary->lambda;
  } else {
    ep.lambda = sample_lambda(dist, rng);
  }
  ep.candidate = rng.index(theta->config.population);
  const std::uint64_t seed = rng.next_u64();
  ep.result = ctx.runner(ep.lambda, *theta, ep.candidate, seed);

  // The episode ran under possibly stale snapshots; its result is accepted as is.
  if (eval) {
    const PerfRecord rec{ep.boundary->dim_index, ep.boundary->side, ep.result.performance};
    with_retry(ctx.retry, [&] { store.push_perf(rec); });
  }
  if (!eval || ctx.train_on_eval) {
    const Rollout r{theta->version, ep.candidate,          ep.lambda,
                    seed,           ep.result.performance, ep.result.reward};
    with_retry(ctx.retry, [&] { store.push_rollout(r); });
  }
  return ep;
}

WorkerExit worker_loop(WorkerRole role, Store& store, const WorkerContext& ctx, Rng& rng,
                       const std::atomic<bool>& stop, std::atomic<long>& budget, EventLog* log) {
  while (!stop) {
    if (budget.fetch_sub(1) <= 0) {
      budget.fetch_add(1);
      return WorkerExit::Stopped;
    }
    try {
      if (!worker_episode(role, store, ctx, rng)) {
        budget.fetch_add(1);  // nothing ran
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
      }
    } catch (const StoreUnavailable& e) {
      budget.fetch_add(1);
      if (log) log->emit({{"type", "worker_error"}, {"role", role_name(role)}, {"error", e.what()}});
      return WorkerExit::StoreUnreachable;
    }
  }
  return WorkerExit::Stopped;
}

// ---------------------------------------------------------------------------

Updater::Updater(AdrDistribution initial, AdrConfig config, std::uint64_t version)
    : dist_(std::move(initial)),
      config_(config),
      buffers_(dist_.size()),
      version_(version) {
  config_.validate();
}

std::size_t Updater::step(Store& store, std::uint64_t t, EventLog* log) {
  const auto records = store.drain_perf();
  bool moved = false;
  for (const auto& r : records) {
    ++consumed_;
    if (r.dim >= dist_.size() || !std::isfinite(r.p)) {
      ++dropped_;
      if (log) {
        log->emit({{"type", "dropped_perf"}, {"t", t}, {"dim", r.dim}, {"reason",
                   r.dim >= dist_.size() ? "unknown dimension" : "non-finite performance"}});
      }
      continue;
    }
    const auto u = record_performance(buffers_, config_, r.dim, r.side, r.p, dist_);
    if (!u) continue;
    if (log) log->emit(boundary_update_record(t, dist_, *u));
    moved = moved || u->new_value != u->old_value;
  }
  if (moved) {
    const auto snap = phi_snapshot(dist_, version_ + 1);
    if (store.put_phi(snap)) {
      version_ = snap.version;
      if (log) log->emit(distribution_record(t, version_, dist_));
    } else {
      // Another writer got there first; adopt the stored phi.
      const auto theirs = store.get_phi();
      dist_ = distribution_from_snapshot(dist_, theirs);
      version_ = theirs.version;
      if (log) log->emit({{"type", "phi_conflict"}, {"t", t}, {"version", theirs.version}});
    }
  }
  return records.size();
}

Trainer::Trainer(std::shared_ptr<const Learner> learner, LearnerSnapshot initial,
                 std::size_t batch_size)
    : learner_(std::move(learner)), snapshot_(std::move(initial)), batch_size_(batch_size) {
  if (batch_size_ == 0) throw ConfigError("trainer batch size must be positive");
}

void Trainer::publish_initial(Store& store) {
  if (!store.get_theta()) store.put_theta(snapshot_);
}

bool Trainer::step(Store& store, std::uint64_t t, EventLog* log) {
  for (auto& r : store.drain_rollouts()) {
    if (r.version == snapshot_.version) {
      pending_.push_back(std::move(r));
    } else {
      ++stale_;
    }
  }
  if (pending_.size() < batch_size_) return false;
  double mean = 0.0;
  for (const auto& r : pending_) mean += r.performance;
  mean /= static_cast<double>(pending_.size());
  auto next = learner_->update(snapshot_, pending_);
  pending_.clear();
  if (!store.put_theta(next)) throw ContractError("theta has a second writer");
  snapshot_ = std::move(next);
  if (log) {
    log->emit({{"type", "theta"},
               {"t", t},
               {"version", snapshot_.version},
               {"batch_mean_performance", mean}});
  }
  return true;
}

// ---------------------------------------------------------------------------

AdrDistribution initial_distribution(const ExperimentConfig& config) {
  auto dims = config.catalog.dims();
  if (!config.initial_bounds) return init_from_calibration(std::move(dims), config.adr);
  return AdrDistribution(std::move(dims), config.initial_bounds->first,
                         config.initial_bounds->second);
}

namespace {

WorkerRole episode_role(const ExperimentConfig& c) {
  return c.adr_enabled ? c.worker_role : WorkerRole::Rollout;
}

WorkerContext make_context(const ExperimentConfig& c, const AdrDistribution& layout) {
  WorkerContext ctx;
  ctx.layout = layout;
  ctx.runner = c.runner ? c.runner : env_runner(c.env, c.catalog, c.episode);
  ctx.boundary_prob = c.adr.boundary_prob;
  ctx.train_on_eval = c.train_on_eval;
  return ctx;
}

std::shared_ptr<const Learner> make_learner(const ExperimentConfig& c) {
  return std::make_shared<CemLearner>(c.learner, c.reward_tiebreak);
}

}  // namespace

ExperimentResult run_deterministic(const ExperimentConfig& config, std::uint64_t seed,
                                   std::uint64_t total_episodes, EventLog& log) {
  config.adr.validate();
  config.episode.validate();
  if (config.workers == 0) throw ConfigError("need at least one worker");
  const auto init = initial_distribution(config);
  InProcessStore store(phi_snapshot(init, 0));
  log.emit(distribution_record(0, 0, init));

  auto learner = make_learner(config);
  Trainer trainer(learner, learner->initial(),
                  config.learner.population * config.episodes_per_candidate);
  trainer.publish_initial(store);
  Updater updater(init, config.adr);
  const auto ctx = make_context(config, init);
  const auto role = episode_role(config);

  std::vector<Rng> streams;
  for (std::size_t w = 0; w < config.workers; ++w) streams.emplace_back(Rng::derive(seed, 1000 + w));

  ExperimentResult res;
  const auto progress = [&](std::uint64_t t) {
    if (config.on_progress) config.on_progress(t, updater.distribution(), trainer.snapshot(), log);
  };
  if (config.progress_interval > 0) progress(0);
  for (std::uint64_t e = 0; e < total_episodes; ++e) {
    const auto ep = worker_episode(role, store, ctx, streams[e % config.workers]);
    if (ep && ep->kind == EpisodeKind::AdrEval) ++res.eval_episodes;
    const std::uint64_t t = e + 1;
    if (config.adr_enabled) updater.step(store, t, &log);
    trainer.step(store, t, &log);
    if (config.progress_interval > 0 && t % config.progress_interval == 0) progress(t);
  }
  res.final_phi = updater.distribution();
  res.phi_version = updater.version();
  res.final_theta = trainer.snapshot();
  res.episodes = total_episodes;
  res.counters = store.counters();
  res.stale_rollouts = trainer.stale();
  return res;
}

ExperimentResult run_concurrent(const ExperimentConfig& config, std::uint64_t seed,
                                std::uint64_t total_episodes, EventLog& log, Store* external) {
  config.adr.validate();
  config.episode.validate();
  if (config.workers == 0) throw ConfigError("need at least one worker");
  const auto init = initial_distribution(config);
  std::unique_ptr<InProcessStore> own;
  if (!external) own = std::make_unique<InProcessStore>(phi_snapshot(init, 0));
  Store& store = external ? *external : *own;
  const auto start_phi = store.get_phi();
  log.emit(distribution_record(0, start_phi.version, distribution_from_snapshot(init, start_phi)));

  auto learner = make_learner(config);
  Trainer trainer(learner, learner->initial(),
                  config.learner.population * config.episodes_per_candidate);
  trainer.publish_initial(store);
  Updater updater(distribution_from_snapshot(init, start_phi), config.adr, start_phi.version);
  const auto role = episode_role(config);

  std::atomic<bool> stop{false};
  std::atomic<bool> workers_done{false};
  std::atomic<long> budget{static_cast<long>(total_episodes)};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < config.workers; ++w) {
    workers.emplace_back([&, w] {
      const auto ctx = make_context(config, init);  // one environment per worker
      Rng rng(Rng::derive(seed, 1000 + w));
      worker_loop(role, store, ctx, rng, stop, budget, &log);
    });
  }
  const auto done_episodes = [&] {
    return total_episodes - static_cast<std::uint64_t>(std::max(0L, budget.load()));
  };
  std::thread updater_thread([&] {
    while (!workers_done) {
      if (config.adr_enabled) updater.step(store, done_episodes(), &log);
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    if (config.adr_enabled) updater.step(store, done_episodes(), &log);
  });
  std::thread trainer_thread([&] {
    while (!workers_done) {
      trainer.step(store, done_episodes(), &log);
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    trainer.step(store, done_episodes(), &log);
  });
  for (auto& t : workers) t.join();
  workers_done = true;
  updater_thread.join();
  trainer_thread.join();

  ExperimentResult res;
  res.final_phi = updater.distribution();
  res.phi_version = updater.version();
  res.final_theta = trainer.snapshot();
  res.episodes = done_episodes();
  res.counters = store.counters();
  res.eval_episodes = res.counters.perf_pushed;
  res.stale_rollouts = trainer.stale();
  return res;
}

}  // namespace adr
