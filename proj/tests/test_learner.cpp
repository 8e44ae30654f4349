#include <cmath>
#include <set>

#include "doctest.h"

#include "adr/errors.hpp"
#include "adr/learner.hpp"

using namespace adr;

namespace {

LearnerConfig small_config(bool memory = true) {
  LearnerConfig c;
  c.obs_dim = 3;
  c.act_dim = 2;
  c.memory = memory;
  c.decay = 0.8;
  c.population = 10;
  c.seed = 77;
  return c;
}

std::vector<double> random_params(const LearnerConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> p(c.parameter_count());
  for (auto& x : p) x = rng.normal(0.0, 0.3);
  return p;
}

}  // namespace

TEST_CASE("parameter layout") {
  const auto c = small_config();
  CHECK(c.trace_size() == 5);
  CHECK(c.input_size() == 9);
  CHECK(c.parameter_count() == 18);
  CHECK(small_config(false).parameter_count() == 8);
}

TEST_CASE("zero parameters give zero action") {
  const auto c = small_config();
  std::vector<double> p(c.parameter_count(), 0.0);
  auto mem = initial_memory(c);
  const double o[3] = {0.4, -2.0, 1.0};
  for (int i = 0; i < 3; ++i) {
    const auto a = act(c, p, mem, o);
    CHECK(a == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("linear policy output matches a hand computation") {
  auto c = small_config(false);
  std::vector<double> p(c.parameter_count());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.1 * static_cast<double>(i);
  auto mem = initial_memory(c);
  const double o[3] = {1.0, 2.0, -1.0};
  const auto a = act(c, p, mem, o);
  // row 0: 0*1 + 0.1*2 + 0.2*-1 + 0.3 = 0.3; row 1: 0.4 + 1.0 - 0.6 + 0.7 = 1.5 -> 1
  CHECK(a[0] == doctest::Approx(0.3));
  CHECK(a[1] == 1.0);
}

TEST_CASE("trace converges geometrically under constant observation") {
  const auto c = small_config();
  const auto p = random_params(c, 3);
  auto mem = initial_memory(c);
  const double o[3] = {0.5, -1.5, 2.0};
  for (int k = 1; k <= 40; ++k) {
    act(c, p, mem, o);
    const double shrink = std::pow(c.decay, k);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(mem.trace[i] - (1.0 - shrink) * o[i]) < 1e-12);
    }
  }
}

TEST_CASE("memory reset") {
  const auto c = small_config();
  const auto p = random_params(c, 5);
  auto mem = initial_memory(c);
  const double o1[3] = {1.0, 0.0, -1.0};
  const double o2[3] = {0.2, 0.3, 0.4};
  for (int i = 0; i < 7; ++i) act(c, p, mem, o1);
  reset_memory(mem);
  CHECK(mem.trace == std::vector<double>(c.trace_size(), 0.0));
  reset_memory(mem);
  CHECK(mem.trace == std::vector<double>(c.trace_size(), 0.0));

  auto fresh = initial_memory(c);
  const auto a = act(c, p, mem, o2);
  const auto b = act(c, p, fresh, o2);
  CHECK(a == b);
  CHECK(mem.trace == fresh.trace);

  reset_memory(mem);
  const auto again = act(c, p, mem, o2);
  CHECK(again == a);
}

TEST_CASE("act contract errors") {
  const auto c = small_config();
  const auto p = random_params(c, 1);
  auto mem = initial_memory(c);
  const double short_obs[2] = {0.0, 0.0};
  CHECK_THROWS_AS(act(c, p, mem, short_obs), ContractError);
  const double o[3] = {0.0, 0.0, 0.0};
  std::vector<double> wrong(p.size() + 1, 0.0);
  CHECK_THROWS_AS(act(c, wrong, mem, o), ContractError);
  LearnerConfig bad = c;
  bad.elite_fraction = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("candidates are deterministic per snapshot") {
  CemLearner learner(small_config());
  const auto s = learner.initial();
  CHECK(s.version == 0);
  CHECK(candidate_parameters(s, 3) == candidate_parameters(s, 3));
  CHECK(candidate_parameters(s, 3) != candidate_parameters(s, 4));
  auto bumped = s;
  bumped.version = 1;
  CHECK(candidate_parameters(bumped, 3) != candidate_parameters(s, 3));
}

TEST_CASE("all-equal performances refit to the population mean") {
  const auto c = small_config();
  CemLearner learner(c, false);
  const auto s = learner.initial();
  std::vector<Rollout> batch;
  for (std::size_t k = 0; k < c.population; ++k) batch.push_back({0, k, {}, k, 7.0, 0.0});
  const auto next = learner.update(s, batch);
  CHECK(next.version == 1);
  std::vector<double> mean(c.parameter_count(), 0.0);
  for (std::size_t k = 0; k < c.population; ++k) {
    const auto p = candidate_parameters(s, k);
    for (std::size_t i = 0; i < p.size(); ++i) mean[i] += p[i] / static_cast<double>(c.population);
  }
  for (std::size_t i = 0; i < mean.size(); ++i) {
    CHECK(next.parameters[i] == doctest::Approx(mean[i]).epsilon(1e-12));
  }
}

TEST_CASE("elite selection is rank based") {
  std::vector<Rollout> batch;
  const double perf[10] = {3, 9, 1, 4, 8, 0, 2, 7, 5, 6};
  for (std::size_t k = 0; k < 10; ++k) batch.push_back({0, k, {}, k, perf[k], 0.0});
  const auto e = select_elites(batch, 0.2);
  CHECK(e.evaluated == 10);
  CHECK(std::set<std::size_t>(e.candidates.begin(), e.candidates.end()) ==
        std::set<std::size_t>{1, 4});

  auto shifted = batch;
  for (auto& r : shifted) r.performance += 123.5;
  CHECK(select_elites(shifted, 0.2).candidates == e.candidates);

  // Ties with the last elite are kept.
  batch[7].performance = 8;
  const auto tied = select_elites(batch, 0.2);
  CHECK(std::set<std::size_t>(tied.candidates.begin(), tied.candidates.end()) ==
        std::set<std::size_t>{1, 4, 7});

  // Reward breaks performance ties when enabled.
  batch[7].reward = 1.0;
  const auto broken = select_elites(batch, 0.2);
  CHECK(std::set<std::size_t>(broken.candidates.begin(), broken.candidates.end()) ==
        std::set<std::size_t>{1, 7});
  CHECK(select_elites(batch, 0.2, false).candidates.size() == 3);

  // Repeated candidates are averaged.
  std::vector<Rollout> repeated{{0, 0, {}, 0, 10, 0}, {0, 0, {}, 1, 0, 0}, {0, 1, {}, 2, 6, 0}};
  CHECK(select_elites(repeated, 0.5).candidates == std::vector<std::size_t>{1});
}

TEST_CASE("update contract") {
  CemLearner learner(small_config());
  const auto s = learner.initial();
  CHECK_THROWS_AS(learner.update(s, {}), ContractError);
  const std::vector<Rollout> stale{{5, 0, {}, 0, 1.0, 0.0}};
  CHECK_THROWS_AS(learner.update(s, stale), ContractError);
  const std::vector<Rollout> outside{{0, 99, {}, 0, 1.0, 0.0}};
  CHECK_THROWS_AS(learner.update(s, outside), ContractError);

  std::vector<Rollout> mixed{{0, 1, {}, 0, 1.0, 0.0}, {3, 2, {}, 0, 50.0, 0.0}};
  const auto next = learner.update(s, mixed);
  CHECK(next.parameters == candidate_parameters(s, 1));
  CHECK(next.version == 1);
  const auto after = learner.update(next, std::vector<Rollout>{{1, 0, {}, 0, 1.0, 0.0}});
  CHECK(after.version == 2);
  for (double sd : after.stddev) CHECK(sd >= small_config().std_floor);
}

TEST_CASE("snapshot json round trip") {
  CemLearner learner(small_config());
  auto s = learner.initial();
  std::vector<Rollout> batch;
  for (std::size_t k = 0; k < 10; ++k) batch.push_back({0, k, {}, k, double(k % 3), 0.1 * k});
  s = learner.update(s, batch);
  const auto text = to_json(s).dump();
  const auto back = learner_snapshot_from_json(nlohmann::json::parse(text));
  CHECK(back.version == s.version);
  CHECK(back.parameters == s.parameters);
  CHECK(back.stddev == s.stddev);
  CHECK(to_json(back.config) == to_json(s.config));

  auto j = to_json(s);
  j["format"] = "other";
  CHECK_THROWS_AS(learner_snapshot_from_json(j), DataError);
  j = to_json(s);
  j["parameters"].erase(0);
  CHECK_THROWS_AS(learner_snapshot_from_json(j), DataError);

  const Rollout r{4, 2, {0.5, -1.0}, 99, 12.0, -3.5};
  const auto rb = rollout_from_json(nlohmann::json::parse(to_json(r).dump()));
  CHECK(rb.version == 4);
  CHECK(rb.candidate == 2);
  CHECK(rb.lambda == r.lambda);
  CHECK(rb.performance == 12.0);
  CHECK(rb.reward == -3.5);
}

TEST_CASE("same snapshot, lambda and seed give identical trajectories") {
  auto env = make_env(EnvKind::Reacher, default_catalog(EnvKind::Reacher),
                      EpisodeConfig::defaults_for(EnvKind::Reacher));
  CemLearner learner(learner_config_for(*env));
  const auto s = learner.initial();
  std::vector<double> lam(env->catalog().size(), 0.3);
  PolicyController a(s, 5);
  PolicyController b(s, 5);
  CHECK(to_json(run_episode(*env, lam, a, 12).record) == to_json(run_episode(*env, lam, b, 12).record));
}

TEST_CASE("cem solves the noiseless reacher within 30 iterations") {
  auto env = make_env(EnvKind::Reacher, noiseless_reacher_catalog(),
                      EpisodeConfig::defaults_for(EnvKind::Reacher));
  CemLearner learner(learner_config_for(*env));
  auto snap = learner.initial();
  const auto lam = env->catalog().calibration();
  std::uint64_t seed = 0;
  for (int it = 0; it < 30; ++it) {
    std::vector<Rollout> batch;
    for (std::size_t k = 0; k < snap.config.population; ++k) {
      PolicyController c(snap, k);
      const auto out = run_episode(*env, lam, c, ++seed);
      batch.push_back({snap.version, k, lam, seed, double(out.performance), out.total_reward});
    }
    snap = learner.update(snap, batch);
  }
  CHECK(snap.version == 30);
  PolicyController policy(snap);
  double total = 0.0;
  for (int e = 0; e < 20; ++e) total += run_episode(*env, lam, policy, 500000 + e).performance;
  CHECK(total / 20.0 >= 45.0);
}
