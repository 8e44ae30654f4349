#include "adr/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "adr/errors.hpp"
#include "adr/random.hpp"

namespace adr {

void LearnerConfig::validate() const {
  if (obs_dim == 0 || act_dim == 0) throw ConfigError("learner dimensions must be positive");
  if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("trace decay must lie in [0, 1)");
  if (population == 0) throw ConfigError("population must be positive");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) {
    throw ConfigError("elite fraction must lie in (0, 1]");
  }
  if (!(init_std > 0.0) || !(std_floor >= 0.0)) throw ConfigError("bad learner spread");
}

MemoryState initial_memory(const LearnerConfig& config) {
  return MemoryState{std::vector<double>(config.trace_size(), 0.0)};
}

void reset_memory(MemoryState& memory) { std::fill(memory.trace.begin(), memory.trace.end(), 0.0); }

std::vector<double> act(const LearnerConfig& config, std::span<const double> parameters,
                        MemoryState& memory, std::span<const double> observation) {
  if (observation.size() != config.obs_dim) {
    throw ContractError("observation has " + std::to_string(observation.size()) +
                        " entries, policy expects " + std::to_string(config.obs_dim));
  }
  if (parameters.size() != config.parameter_count()) {
    throw ContractError("parameter vector has the wrong size");
  }
  const std::size_t ts = config.trace_size();
  if (memory.trace.size() != ts) memory.trace.assign(ts, 0.0);

  const std::size_t in = config.input_size();
  std::vector<double> a(config.act_dim, 0.0);
  for (std::size_t r = 0; r < config.act_dim; ++r) {
    const double* w = parameters.data() + r * in;
    double s = w[in - 1];
    for (std::size_t i = 0; i < config.obs_dim; ++i) s += w[i] * observation[i];
    for (std::size_t i = 0; i < ts; ++i) s += w[config.obs_dim + i] * memory.trace[i];
    a[r] = std::clamp(s, -1.0, 1.0);
  }
  if (ts > 0) {
    const double d = config.decay;
    for (std::size_t i = 0; i < config.obs_dim; ++i) {
      memory.trace[i] = d * memory.trace[i] + (1.0 - d) * observation[i];
    }
    for (std::size_t i = 0; i < config.act_dim; ++i) {
      auto& t = memory.trace[config.obs_dim + i];
      t = d * t + (1.0 - d) * a[i];
    }
  }
  return a;
}

std::vector<double> act(const LearnerSnapshot& snapshot, MemoryState& memory,
                        std::span<const double> observation) {
  return act(snapshot.config, snapshot.parameters, memory, observation);
}

std::vector<double> candidate_parameters(const LearnerSnapshot& snapshot, std::size_t k) {
  Rng rng(Rng::derive(Rng::derive(snapshot.config.seed, snapshot.version), k));
  std::vector<double> p(snapshot.parameters.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = rng.normal(snapshot.parameters[i], snapshot.stddev[i]);
  }
  return p;
}

nlohmann::json to_json(const Rollout& r) {
  return {{"type", "rollout"},        {"version", r.version},
          {"candidate", r.candidate}, {"lambda", r.lambda},
          {"seed", r.seed},           {"performance", r.performance},
          {"reward", r.reward}};
}

Rollout rollout_from_json(const nlohmann::json& j) {
  try {
    Rollout r;
    r.version = j.at("version").get<std::uint64_t>();
    r.candidate = j.at("candidate").get<std::size_t>();
    r.lambda = j.at("lambda").get<std::vector<double>>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.performance = j.at("performance").get<double>();
    r.reward = j.value("reward", 0.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed rollout: ") + e.what());
  }
}

EliteSelection select_elites(std::span<const Rollout> batch, double elite_fraction,
                             bool reward_tiebreak) {
  struct Score {
    double perf = 0.0;
    double reward = 0.0;
    int n = 0;
  };
  std::map<std::size_t, Score> by_candidate;
  for (const auto& r : batch) {
    auto& s = by_candidate[r.candidate];
    s.perf += r.performance;
    s.reward += r.reward;
    ++s.n;
  }
  struct Ranked {
    std::size_t id;
    double perf;
    double reward;
  };
  std::vector<Ranked> ranked;
  for (const auto& [id, s] : by_candidate) {
    ranked.push_back({id, s.perf / s.n, reward_tiebreak ? s.reward / s.n : 0.0});
  }
  const auto better = [](const Ranked& a, const Ranked& b) {
    if (a.perf != b.perf) return a.perf > b.perf;
    return a.reward > b.reward;
  };
  std::stable_sort(ranked.begin(), ranked.end(), better);

  EliteSelection out;
  out.evaluated = ranked.size();
  if (ranked.empty()) return out;
  const auto n_elite = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(elite_fraction * static_cast<double>(ranked.size()))));
  const Ranked& cutoff = ranked[std::min(n_elite, ranked.size()) - 1];
  for (const auto& r : ranked) {
    if (!better(cutoff, r)) out.candidates.push_back(r.id);
  }
  return out;
}

CemLearner::CemLearner(LearnerConfig config, bool reward_tiebreak)
    : config_(config), reward_tiebreak_(reward_tiebreak) {
  config_.validate();
}

LearnerSnapshot CemLearner::initial() const {
  LearnerSnapshot s;
  s.version = 0;
  s.config = config_;
  s.parameters.assign(config_.parameter_count(), 0.0);
  s.stddev.assign(config_.parameter_count(), config_.init_std);
  return s;
}

LearnerSnapshot CemLearner::update(const LearnerSnapshot& snapshot,
                                   std::span<const Rollout> batch) const {
  std::vector<Rollout> current;
  for (const auto& r : batch) {
    if (r.version != snapshot.version) continue;
    if (r.candidate >= snapshot.config.population) {
      throw ContractError("rollout candidate outside the population");
    }
    if (!std::isfinite(r.performance)) throw ContractError("non-finite rollout performance");
    current.push_back(r);
  }
  if (current.empty()) throw ContractError("update needs at least one current-version rollout");

  const auto elites = select_elites(current, snapshot.config.elite_fraction, reward_tiebreak_);
  const std::size_t n = snapshot.parameters.size();
  std::vector<double> mean(n, 0.0);
  std::vector<double> sq(n, 0.0);
  for (const auto id : elites.candidates) {
    const auto p = candidate_parameters(snapshot, id);
    for (std::size_t i = 0; i < n; ++i) {
      mean[i] += p[i];
      sq[i] += p[i] * p[i];
    }
  }
  const double k = static_cast<double>(elites.candidates.size());
  LearnerSnapshot next;
  next.version = snapshot.version + 1;
  next.config = snapshot.config;
  next.parameters.resize(n);
  next.stddev.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = mean[i] / k;
    const double var = std::max(0.0, sq[i] / k - m * m);
    next.parameters[i] = m;
    next.stddev[i] = std::max(std::sqrt(var), snapshot.config.std_floor);
  }
  return next;
}

PolicyController::PolicyController(LearnerConfig config, std::vector<double> parameters)
    : config_(config), parameters_(std::move(parameters)), memory_(initial_memory(config_)) {
  if (parameters_.size() != config_.parameter_count()) {
    throw ContractError("parameter vector has the wrong size");
  }
}

PolicyController::PolicyController(const LearnerSnapshot& snapshot, std::size_t candidate)
    : PolicyController(snapshot.config, candidate_parameters(snapshot, candidate)) {}

PolicyController::PolicyController(const LearnerSnapshot& snapshot)
    : PolicyController(snapshot.config, snapshot.parameters) {}

std::vector<double> PolicyController::act(std::span<const double> observation) {
  return adr::act(config_, parameters_, memory_, observation);
}

LearnerConfig learner_config_for(const Environment& env, bool memory) {
  LearnerConfig c;
  c.obs_dim = env.observation_size();
  c.act_dim = env.action_size();
  c.memory = memory;
  return c;
}

nlohmann::json to_json(const LearnerConfig& c) {
  return {{"obs_dim", c.obs_dim},
          {"act_dim", c.act_dim},
          {"memory", c.memory},
          {"decay", c.decay},
          {"population", c.population},
          {"elite_fraction", c.elite_fraction},
          {"init_std", c.init_std},
          {"std_floor", c.std_floor},
          {"seed", c.seed}};
}

LearnerConfig learner_config_from_json(const nlohmann::json& j) {
  try {
    LearnerConfig c;
    c.obs_dim = j.at("obs_dim").get<std::size_t>();
    c.act_dim = j.at("act_dim").get<std::size_t>();
    c.memory = j.value("memory", c.memory);
    c.decay = j.value("decay", c.decay);
    c.population = j.value("population", c.population);
    c.elite_fraction = j.value("elite_fraction", c.elite_fraction);
    c.init_std = j.value("init_std", c.init_std);
    c.std_floor = j.value("std_floor", c.std_floor);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed learner config: ") + e.what());
  }
}

nlohmann::json to_json(const LearnerSnapshot& s) {
  return {{"format", "adr-cem-snapshot"},
          {"version", s.version},
          {"config", to_json(s.config)},
          {"parameters", s.parameters},
          {"stddev", s.stddev}};
}

LearnerSnapshot learner_snapshot_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "adr-cem-snapshot") throw DataError("not a learner snapshot");
    LearnerSnapshot s;
    s.version = j.at("version").get<std::uint64_t>();
    s.config = learner_config_from_json(j.at("config"));
    s.parameters = j.at("parameters").get<std::vector<double>>();
    s.stddev = j.at("stddev").get<std::vector<double>>();
    if (s.parameters.size() != s.config.parameter_count() ||
        s.stddev.size() != s.parameters.size()) {
      throw DataError("snapshot parameter count does not match its config");
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed learner snapshot: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("bad learner snapshot config: ") + e.what());
  }
}

}  // namespace adr
