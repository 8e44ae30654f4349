#include "adr/run_config.hpp"

#include <set>

#include "adr/errors.hpp"
#include "adr/report.hpp"

namespace adr {

namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& parent, std::string name) : name_(std::move(name)) {
    if (parent.contains(name_)) {
      j_ = parent.at(name_);
      if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
    } else {
      j_ = json::object();
    }
  }

  template <class T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key " + name_ + "." + key + " has the wrong type");
    }
  }

  template <class T>
  void get(const std::string& key, std::optional<T>& out) {
    used_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  void bounds(const std::string& low, const std::string& high, std::optional<Bounds>& out) {
    std::optional<std::vector<double>> lo, hi;
    get(low, lo);
    get(high, hi);
    if (lo.has_value() != hi.has_value()) {
      throw ConfigError("config keys " + name_ + "." + low + " and " + high + " go together");
    }
    if (lo) out = Bounds{*lo, *hi};
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown config key " + name_ + "." + k);
    }
  }

 private:
  std::string name_;
  json j_;
  std::set<std::string> used_;
};

void check_bounds(const std::optional<Bounds>& b, std::size_t n, const char* what) {
  if (!b) return;
  if (b->first.size() != n || b->second.size() != n) {
    throw ConfigError(std::string(what) + " bounds must have one entry per catalog dimension");
  }
}

}  // namespace

std::string_view run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Deterministic: return "deterministic";
    case RunMode::Concurrent: return "concurrent";
    case RunMode::Socket: return "socket";
  }
  return "?";
}

RunMode parse_run_mode(std::string_view name) {
  for (auto m : {RunMode::Deterministic, RunMode::Concurrent, RunMode::Socket}) {
    if (run_mode_name(m) == name) return m;
  }
  throw ConfigError("unknown run mode: " + std::string(name));
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> kSections{"env",  "catalog", "episode", "adr",
                                               "learner", "run", "eval", "curriculum",
                                               "perturbation"};
  for (const auto& [k, v] : j.items()) {
    if (!kSections.count(k)) throw ConfigError("unknown config section " + k);
  }
  RunConfig c;
  try {
    if (j.contains("env")) c.env = parse_env_kind(j.at("env").get<std::string>());
  } catch (const json::exception&) {
    throw ConfigError("config key env must be a string");
  }
  c.episode = EpisodeConfig::defaults_for(c.env);
  c.catalog_source = j.value("catalog", json("default"));
  if (c.catalog_source.is_string()) {
    const auto name = c.catalog_source.get<std::string>();
    if (name == "default") {
      c.catalog = default_catalog(c.env);
    } else if (name == "noiseless") {
      if (c.env != EnvKind::Reacher) throw ConfigError("the noiseless catalog is Reacher-only");
      c.catalog = noiseless_reacher_catalog();
    } else {
      throw ConfigError("unknown catalog preset: " + name);
    }
  } else {
    c.catalog = Catalog::from_json(c.catalog_source);
  }

  {
    Section s(j, "episode");
    s.get("max_consecutive_successes", c.episode.max_consecutive_successes);
    s.get("timeout_steps", c.episode.timeout_steps);
    s.get("reward_success", c.episode.reward_success);
    s.get("reward_drop", c.episode.reward_drop);
    s.get("success_tolerance", c.episode.success_tolerance);
    s.get("step_seconds", c.episode.step_seconds);
    s.finish();
  }
  {
    Section s(j, "adr");
    s.get("step_size", c.adr.step_size);
    s.get("threshold_low", c.adr.threshold_low);
    s.get("threshold_high", c.adr.threshold_high);
    s.get("buffer_size", c.adr.buffer_size);
    s.get("boundary_prob", c.adr.boundary_prob);
    s.get("phi_max", c.adr.phi_max);
    s.finish();
  }
  {
    Section s(j, "learner");
    s.get("memory", c.memory);
    s.get("decay", c.decay);
    s.get("population", c.population);
    s.get("elite_fraction", c.elite_fraction);
    s.get("init_std", c.init_std);
    s.get("std_floor", c.std_floor);
    s.get("reward_tiebreak", c.reward_tiebreak);
    s.get("episodes_per_candidate", c.episodes_per_candidate);
    s.finish();
  }
  {
    Section s(j, "run");
    s.get("seeds", c.seeds);
    s.get("episodes", c.episodes);
    std::string mode(run_mode_name(c.mode));
    s.get("mode", mode);
    c.mode = parse_run_mode(mode);
    s.get("workers", c.workers);
    std::string role(role_name(c.worker_role));
    s.get("worker_role", role);
    try {
      c.worker_role = parse_role(role);
    } catch (const std::exception&) {
      throw ConfigError("unknown worker role: " + role);
    }
    s.get("train_on_eval", c.train_on_eval);
    s.bounds("initial_low", "initial_high", c.initial_bounds);
    s.finish();
  }
  {
    Section s(j, "eval");
    s.get("interval", c.eval_interval);
    s.get("episodes", c.eval_episodes);
    s.get("seed", c.eval_seed);
    s.bounds("held_out_low", "held_out_high", c.held_out);
    s.get("held_out_width", c.held_out_width);
    s.finish();
  }
  {
    Section s(j, "curriculum");
    if (s.has("snapshots")) {
      const auto& snaps = s.raw("snapshots");
      if (!snaps.is_object()) throw ConfigError("curriculum.snapshots must be an object");
      c.snapshots.clear();
      for (const auto& [name, f] : snaps.items()) {
        if (!f.is_number()) throw ConfigError("snapshot fractions must be numbers");
        c.snapshots.emplace_back(name, f.get<double>());
      }
      std::stable_sort(c.snapshots.begin(), c.snapshots.end(),
                       [](const auto& a, const auto& b) { return a.second < b.second; });
    }
    s.get("threshold_fraction", c.threshold_fraction);
    s.get("threshold", c.threshold);
    s.finish();
  }
  {
    Section s(j, "perturbation");
    if (s.has("kinds")) {
      std::vector<std::string> kinds;
      s.get("kinds", kinds);
      c.perturbation_kinds.clear();
      for (const auto& k : kinds) c.perturbation_kinds.push_back(parse_perturbation(k));
    }
    s.get("triggers", c.triggers);
    s.get("trials", c.trials);
    s.get("threads", c.threads);
    s.get("policy", c.policy);
    s.bounds("lambda_low", "lambda_high", c.perturbation_lambda);
    s.finish();
  }

  c.episode.validate();
  c.adr.validate();
  if (c.seeds.empty()) throw ConfigError("run.seeds must not be empty");
  if (c.workers < 1) throw ConfigError("run.workers must be at least 1");
  if (c.trials < 1) throw ConfigError("perturbation.trials must be at least 1");
  if (!(c.held_out_width >= 0.0)) throw ConfigError("eval.held_out_width must be non-negative");
  check_bounds(c.initial_bounds, c.catalog.size(), "run.initial");
  check_bounds(c.held_out, c.catalog.size(), "eval.held_out");
  check_bounds(c.perturbation_lambda, c.catalog.size(), "perturbation.lambda");
  PerturbationSpec{PerturbationKind::ResetMemory, c.triggers}.validate(
      c.episode.max_consecutive_successes);
  c.learner_config().validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  const auto text = read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json snaps = json::object();
  for (const auto& [name, f] : snapshots) snaps[name] = f;
  std::vector<std::string> kinds;
  for (const auto k : perturbation_kinds) kinds.emplace_back(perturbation_name(k));
  json j;
  j["env"] = env_kind_name(env);
  j["catalog"] = catalog_source;
  j["episode"] = {{"max_consecutive_successes", episode.max_consecutive_successes},
                  {"timeout_steps", episode.timeout_steps},
                  {"reward_success", episode.reward_success},
                  {"reward_drop", episode.reward_drop},
                  {"success_tolerance", episode.success_tolerance},
                  {"step_seconds", episode.step_seconds}};
  j["adr"] = {{"step_size", adr.step_size},           {"threshold_low", adr.threshold_low},
              {"threshold_high", adr.threshold_high}, {"buffer_size", adr.buffer_size},
              {"boundary_prob", adr.boundary_prob},   {"phi_max", adr.phi_max}};
  j["learner"] = {{"memory", memory},
                  {"decay", decay},
                  {"population", population},
                  {"elite_fraction", elite_fraction},
                  {"init_std", init_std},
                  {"std_floor", std_floor},
                  {"reward_tiebreak", reward_tiebreak},
                  {"episodes_per_candidate", episodes_per_candidate}};
  j["run"] = {{"seeds", seeds},
              {"episodes", episodes},
              {"mode", run_mode_name(mode)},
              {"workers", workers},
              {"worker_role", role_name(worker_role)},
              {"train_on_eval", train_on_eval}};
  if (initial_bounds) {
    j["run"]["initial_low"] = initial_bounds->first;
    j["run"]["initial_high"] = initial_bounds->second;
  }
  j["eval"] = {{"interval", eval_interval},
               {"episodes", eval_episodes},
               {"seed", eval_seed},
               {"held_out_width", held_out_width}};
  if (held_out) {
    j["eval"]["held_out_low"] = held_out->first;
    j["eval"]["held_out_high"] = held_out->second;
  }
  j["curriculum"] = {{"snapshots", snaps},
                     {"threshold_fraction", threshold_fraction},
                     {"threshold", threshold ? json(*threshold) : json(nullptr)}};
  j["perturbation"] = {{"kinds", kinds},
                       {"triggers", triggers},
                       {"trials", trials},
                       {"threads", threads},
                       {"policy", policy}};
  if (perturbation_lambda) {
    j["perturbation"]["lambda_low"] = perturbation_lambda->first;
    j["perturbation"]["lambda_high"] = perturbation_lambda->second;
  }
  return j;
}

LearnerConfig RunConfig::learner_config() const {
  const auto e = make_env(env, catalog, episode);
  auto l = learner_config_for(*e, memory);
  l.decay = decay;
  l.population = population;
  l.elite_fraction = elite_fraction;
  l.init_std = init_std;
  l.std_floor = std_floor;
  return l;
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig x;
  x.env = env;
  x.catalog = catalog;
  x.episode = episode;
  x.adr = adr;
  x.learner = learner_config();
  x.initial_bounds = initial_bounds;
  x.worker_role = worker_role;
  x.workers = workers;
  x.train_on_eval = train_on_eval;
  x.episodes_per_candidate = episodes_per_candidate;
  x.reward_tiebreak = reward_tiebreak;
  return x;
}

AdrDistribution RunConfig::held_out_distribution() const {
  if (held_out) return AdrDistribution(catalog.dims(), held_out->first, held_out->second);
  auto lo = catalog.calibration();
  auto hi = lo;
  for (auto& v : lo) v -= held_out_width;
  for (auto& v : hi) v += held_out_width;
  return AdrDistribution(catalog.dims(), lo, hi);
}

CurriculumConfig RunConfig::curriculum() const {
  CurriculumConfig c;
  c.experiment = experiment();
  c.experiment.initial_bounds.reset();
  c.budget = episodes;
  c.eval_interval = eval_interval;
  c.eval_episodes = eval_episodes;
  c.eval_seed = eval_seed;
  c.held_out = held_out_distribution();
  c.snapshots = snapshots;
  c.threshold_fraction = threshold_fraction;
  c.threshold = threshold;
  return c;
}

PerturbationConfig RunConfig::perturbation(PerturbationKind kind, std::uint64_t seed) const {
  PerturbationConfig p;
  p.env = env;
  p.catalog = catalog;
  p.episode = episode;
  p.spec = {kind, triggers};
  p.trials = trials;
  p.seed = seed;
  p.threads = threads;
  return p;
}

ControllerFactory RunConfig::controllers() const {
  if (policy == "scripted") {
    const auto kind = env;
    return [kind]() -> std::unique_ptr<Controller> {
      if (kind == EnvKind::Reacher) return std::make_unique<ScriptedReacher>();
      return std::make_unique<ScriptedCube>();
    };
  }
  if (policy == "idle") {
    const auto n = learner_config().act_dim;
    return [n] { return std::make_unique<IdleController>(n); };
  }
  json j;
  try {
    j = json::parse(read_text(policy));
  } catch (const json::parse_error& e) {
    throw ParseError("policy snapshot is not valid JSON", e.byte);
  }
  const auto snapshot = learner_snapshot_from_json(j);
  const auto expected = learner_config();
  if (snapshot.config.obs_dim != expected.obs_dim || snapshot.config.act_dim != expected.act_dim) {
    throw ConfigError("policy snapshot does not fit the environment");
  }
  return [snapshot] { return std::make_unique<PolicyController>(snapshot); };
}

AdrDistribution RunConfig::perturbation_distribution() const {
  if (perturbation_lambda) {
    return AdrDistribution(catalog.dims(), perturbation_lambda->first, perturbation_lambda->second);
  }
  return init_from_calibration(catalog.dims());
}

RunConfig reacher_curriculum_preset() {
  RunConfig c;
  c.env = EnvKind::Reacher;
  c.catalog = default_catalog(EnvKind::Reacher);
  c.episode = EpisodeConfig::defaults_for(EnvKind::Reacher);
  c.episode.timeout_steps = 50;
  c.adr.step_size = 0.05;
  c.adr.buffer_size = 10;
  c.seeds = {0, 1, 2};
  c.episodes = 10000;
  c.eval_interval = 64;
  c.eval_episodes = 50;
  c.held_out_width = 0.5;
  return c;
}

}  // namespace adr
