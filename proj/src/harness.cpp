#include "adr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "adr/errors.hpp"

namespace adr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view perturbation_name(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::ResetMemory: return "reset_memory";
    case PerturbationKind::ResampleDynamics: return "resample_dynamics";
    case PerturbationKind::BreakJoint: return "break_joint";
  }
  return "?";
}

PerturbationKind parse_perturbation(std::string_view name) {
  for (auto k : {PerturbationKind::ResetMemory, PerturbationKind::ResampleDynamics,
                 PerturbationKind::BreakJoint}) {
    if (perturbation_name(k) == name) return k;
  }
  throw ConfigError("unknown perturbation kind: " + std::string(name));
}

void PerturbationSpec::validate(int max_successes) const {
  int prev = 0;
  for (const int t : triggers) {
    if (t <= prev) throw ConfigError("perturbation triggers must be >= 1 and strictly increasing");
    if (t >= max_successes) throw ConfigError("perturbation trigger must be below the success cap");
    prev = t;
  }
}

double SuccessIndexStats::completion_fraction() const {
  return trials == 0 ? kNaN : static_cast<double>(completed) / static_cast<double>(trials);
}

double SuccessIndexStats::survival_product() const {
  double s = 1.0;
  for (std::size_t i = 0; i < failure_prob.size(); ++i) {
    if (alive[i] > 0) s *= 1.0 - failure_prob[i];
  }
  return s;
}

SuccessIndexStats success_index_stats(std::span<const TrialRecord> records, int max_index) {
  if (max_index < 1) throw DataError("max_index must be positive");
  const auto n = static_cast<std::size_t>(max_index);
  SuccessIndexStats out;
  out.max_index = max_index;
  out.trials = records.size();
  out.alive.assign(n, 0);
  out.failed.assign(n, 0);

  std::vector<std::vector<double>> gaps(n);
  for (const auto& r : records) {
    const auto p = r.successes.size();
    double prev = 0.0;
    for (const auto& s : r.successes) {
      if (!(s.time >= prev)) throw DataError("success times must be non-decreasing");
      prev = s.time;
    }
    if (r.termination == Termination::Completed50) {
      if (p != n) throw DataError("completed trial does not hold exactly max_index successes");
      ++out.completed;
      prev = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        gaps[i].push_back(r.successes[i].time - prev);
        prev = r.successes[i].time;
      }
    } else if (p >= n) {
      throw DataError("failed trial holds max_index successes");
    }
    // Alive at index i (1-based) means at least i-1 successes.
    for (std::size_t i = 0; i < std::min(p + 1, n); ++i) ++out.alive[i];
    if (r.termination != Termination::Completed50) ++out.failed[p];
  }

  out.mean_time.assign(n, kNaN);
  out.stderr_time.assign(n, kNaN);
  out.failure_prob.assign(n, kNaN);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = gaps[i];
    if (!g.empty()) {
      double sum = 0.0;
      for (const double x : g) sum += x;
      const double mean = sum / static_cast<double>(g.size());
      out.mean_time[i] = mean;
      if (g.size() >= 2) {
        double ss = 0.0;
        for (const double x : g) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / static_cast<double>(g.size() - 1));
        out.stderr_time[i] = sd / std::sqrt(static_cast<double>(g.size()));
      }
    }
    if (out.alive[i] > 0) {
      out.failure_prob[i] =
          static_cast<double>(out.failed[i]) / static_cast<double>(out.alive[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<TrialRecord> PerturbationSeries::records() const {
  std::vector<TrialRecord> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back(t.record);
  return out;
}

const PerturbationSeries* PerturbationReport::find(std::string_view name) const {
  for (const auto& s : series) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

nlohmann::json PerturbationReport::metadata() const {
  nlohmann::json j;
  j["kind"] = perturbation_name(spec.kind);
  j["triggers"] = spec.triggers;
  j["failure_denominator"] = kFailureDenominator;
  j["time_statistics"] = "completed trials only; time per index is the gap since the previous success";
  j["series"] = nlohmann::json::array();
  for (const auto& s : series) {
    j["series"].push_back({{"name", s.name},
                           {"trials", s.stats.trials},
                           {"completed", s.stats.completed},
                           {"completion_fraction", s.stats.completion_fraction()}});
  }
  return j;
}

namespace {

enum class SeriesMode { Perturbed, Baseline, BrokenFromStart };

PerturbationTrial run_trial(const PerturbationConfig& config, Environment& env, Controller& ctl,
                            const AdrDistribution& lambdas, std::size_t index, SeriesMode mode) {
  const auto trial_seed = Rng::derive(config.seed, index);
  Rng trial_rng(trial_seed);
  const auto lambda = sample_lambda(lambdas, trial_rng);
  const auto episode_seed = trial_rng.next_u64();
  Rng perturb_rng(Rng::derive(trial_seed, 1));

  PerturbationTrial out;
  const auto& triggers = config.spec.triggers;
  const auto hook = [&](int k, Environment& e, Controller& c) {
    if (k == 0) {
      if (mode == SeriesMode::BrokenFromStart) {
        const auto coord = perturb_rng.index(e.action_size());
        e.break_action(coord);
        out.broken.push_back(coord);
      }
      return;
    }
    if (mode != SeriesMode::Perturbed) return;
    if (!std::binary_search(triggers.begin(), triggers.end(), k)) return;
    out.fired.push_back(k);
    switch (config.spec.kind) {
      case PerturbationKind::ResetMemory:
        c.reset();
        break;
      case PerturbationKind::ResampleDynamics:
        e.resample_dynamics(sample_lambda(lambdas, perturb_rng));
        break;
      case PerturbationKind::BreakJoint: {
        std::vector<std::size_t> working;
        const auto& broken = e.broken_actions();
        for (std::size_t a = 0; a < e.action_size(); ++a) {
          if (std::find(broken.begin(), broken.end(), a) == broken.end()) working.push_back(a);
        }
        if (working.empty()) break;
        const auto coord = working[perturb_rng.index(working.size())];
        e.break_action(coord);
        out.broken.push_back(coord);
        break;
      }
    }
  };
  out.record = run_episode(env, lambda, ctl, episode_seed, hook).record;
  return out;
}

PerturbationSeries run_series(const PerturbationConfig& config, const ControllerFactory& controllers,
                              const AdrDistribution& lambdas, std::string name, SeriesMode mode) {
  PerturbationSeries series;
  series.name = std::move(name);
  series.trials.resize(config.trials);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    auto env = make_env(config.env, config.catalog, config.episode);
    auto ctl = controllers();
    for (auto i = next.fetch_add(1); i < config.trials; i = next.fetch_add(1)) {
      series.trials[i] = run_trial(config, *env, *ctl, lambdas, i, mode);
    }
  };
  const auto threads = std::max<std::size_t>(1, std::min(config.threads, config.trials));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  const auto records = series.records();
  series.stats = success_index_stats(records, config.episode.max_consecutive_successes);
  return series;
}

}  // namespace

PerturbationReport run_perturbation_experiment(const PerturbationConfig& config,
                                               const ControllerFactory& controllers,
                                               const AdrDistribution& lambdas) {
  if (config.trials < 1) throw ConfigError("perturbation experiment needs at least one trial");
  config.episode.validate();
  config.spec.validate(config.episode.max_consecutive_successes);
  if (lambdas.size() != config.catalog.size()) {
    throw ConfigError("lambda distribution does not match the catalog");
  }
  PerturbationReport report;
  report.spec = config.spec;
  report.series.push_back(run_series(config, controllers, lambdas, "perturbed", SeriesMode::Perturbed));
  report.series.push_back(run_series(config, controllers, lambdas, "baseline", SeriesMode::Baseline));
  if (config.spec.kind == PerturbationKind::BreakJoint) {
    report.series.push_back(
        run_series(config, controllers, lambdas, "broken_from_start", SeriesMode::BrokenFromStart));
  }
  return report;
}

// ---------------------------------------------------------------------------

void CurriculumConfig::validate() const {
  if (eval_interval < 1) throw ConfigError("eval_interval must be positive");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be positive");
  if (held_out.size() != experiment.catalog.size()) {
    throw ConfigError("held-out distribution does not match the catalog");
  }
  if (!(threshold_fraction > 0.0 && threshold_fraction <= 1.0)) {
    throw ConfigError("threshold_fraction must lie in (0, 1]");
  }
  for (const auto& [name, f] : snapshots) {
    if (name.empty() || name == "adr") throw ConfigError("bad snapshot name");
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("snapshot fraction must lie in [0, 1]");
  }
  experiment.adr.validate();
  experiment.learner.validate();
  experiment.episode.validate();
}

const CurriculumRun& CurriculumReport::run(std::string_view name) const {
  for (const auto& r : runs) {
    if (r.name == name) return r;
  }
  throw ContractError("no curriculum run named " + std::string(name));
}

bool CurriculumReport::adr_faster_than(std::string_view name) const {
  const auto& a = run("adr");
  const auto& b = run(name);
  if (!a.episodes_to_threshold) return false;
  return !b.episodes_to_threshold || *a.episodes_to_threshold < *b.episodes_to_threshold;
}

nlohmann::json CurriculumReport::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["threshold"] = threshold;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : r.curve) curve.push_back({p.episodes, p.eval, entropy_to_json(p.entropy)});
    std::vector<std::string> names;
    for (const auto& d : r.phi.dims()) names.push_back(d.name);
    j["runs"].push_back({{"name", r.name},
                         {"adr", r.adr},
                         {"dims", names},
                         {"calib", r.phi.calibration()},
                         {"phi_low", std::vector<double>(r.phi.low().begin(), r.phi.low().end())},
                         {"phi_high", std::vector<double>(r.phi.high().begin(), r.phi.high().end())},
                         {"episodes_to_threshold", r.episodes_to_threshold
                                                       ? nlohmann::json(*r.episodes_to_threshold)
                                                       : nlohmann::json(nullptr)},
                         {"curve", curve}});
  }
  return j;
}

double evaluate_policy(const ExperimentConfig& experiment, const LearnerSnapshot& theta,
                       const AdrDistribution& held_out, std::size_t episodes, std::uint64_t seed) {
  auto env = make_env(experiment.env, experiment.catalog, experiment.episode);
  PolicyController policy(theta);
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    const auto lambda = sample_lambda(held_out, rng);
    sum += run_episode(*env, lambda, policy, Rng::derive(seed, i)).performance;
  }
  return episodes == 0 ? 0.0 : sum / static_cast<double>(episodes);
}

namespace {

void mark_threshold(CurriculumRun& run, double threshold) {
  for (const auto& p : run.curve) {
    if (p.eval >= threshold) {
      run.episodes_to_threshold = p.episodes;
      return;
    }
  }
}

}  // namespace

CurriculumReport run_curriculum_comparison(const CurriculumConfig& config, std::uint64_t seed) {
  config.validate();
  ExperimentConfig base = config.experiment;
  base.learner.seed = Rng::derive(seed, 1);
  base.progress_interval = config.eval_interval;
  const auto run_seed = Rng::derive(seed, 2);
  const auto eval = [&](const LearnerSnapshot& theta) {
    return evaluate_policy(base, theta, config.held_out, config.eval_episodes, config.eval_seed);
  };

  CurriculumReport report;
  report.seed = seed;

  CurriculumRun adr_run;
  adr_run.name = "adr";
  adr_run.adr = true;
  std::vector<std::pair<std::uint64_t, AdrDistribution>> history;
  {
    ExperimentConfig a = base;
    a.adr_enabled = true;
    a.on_progress = [&](std::uint64_t t, const AdrDistribution& d, const LearnerSnapshot& theta,
                        EventLog&) {
      adr_run.curve.push_back({t, eval(theta), entropy(d)});
      history.emplace_back(t, d);
    };
    EventLog log;
    const auto res = run_deterministic(a, run_seed, config.budget, log);
    if (adr_run.curve.back().episodes != res.episodes) {
      adr_run.curve.push_back({res.episodes, eval(res.final_theta), entropy(res.final_phi)});
      history.emplace_back(res.episodes, res.final_phi);
    }
    adr_run.phi = res.final_phi;
  }
  report.threshold =
      config.threshold.value_or(config.threshold_fraction * adr_run.curve.back().eval);
  report.runs.push_back(std::move(adr_run));

  for (const auto& [name, fraction] : config.snapshots) {
    const auto target =
        static_cast<std::uint64_t>(std::floor(fraction * static_cast<double>(config.budget)));
    const AdrDistribution* phi = &history.front().second;
    for (const auto& [t, d] : history) {
      if (t <= target) phi = &d;
    }
    CurriculumRun run;
    run.name = name;
    run.phi = *phi;
    const double h = entropy(run.phi);
    ExperimentConfig f = base;
    f.adr_enabled = false;
    f.initial_bounds = std::make_pair(std::vector<double>(run.phi.low().begin(), run.phi.low().end()),
                                      std::vector<double>(run.phi.high().begin(), run.phi.high().end()));
    f.on_progress = [&](std::uint64_t t, const AdrDistribution&, const LearnerSnapshot& theta,
                        EventLog&) { run.curve.push_back({t, eval(theta), h}); };
    EventLog log;
    const auto res = run_deterministic(f, run_seed, config.budget, log);
    if (run.curve.back().episodes != res.episodes) {
      run.curve.push_back({res.episodes, eval(res.final_theta), h});
    }
    report.runs.push_back(std::move(run));
  }
  for (auto& r : report.runs) mark_threshold(r, report.threshold);
  return report;
}

}  // namespace adr
