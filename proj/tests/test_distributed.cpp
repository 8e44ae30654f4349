#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "doctest.h"

#include "adr/distributed.hpp"
#include "adr/errors.hpp"

using namespace adr;

namespace {

std::vector<RandomizationDimension> two_dims() { return {{"a", 0.0, ""}, {"b", 0.5, ""}}; }

EpisodeRunner constant_runner(double p) {
  return [p](std::span<const double>, const LearnerSnapshot&, std::size_t, std::uint64_t) {
    return EpisodeResult{p, 0.0};
  };
}

LearnerSnapshot tiny_theta() {
  LearnerConfig c;
  c.obs_dim = 1;
  c.act_dim = 1;
  c.population = 4;
  return CemLearner(c).initial();
}

ExperimentConfig fake_experiment(double p) {
  ExperimentConfig c;
  c.catalog = Catalog::from_json(nlohmann::json::parse(R"({
    "dims": [{"name": "x", "calib": 0.0}, {"name": "y", "calib": 1.0}],
    "randomizers": []})"));
  c.learner.obs_dim = 1;
  c.learner.act_dim = 1;
  c.learner.population = 8;
  c.runner = constant_runner(p);
  return c;
}

}  // namespace

TEST_CASE("in-process store compare-and-set") {
  InProcessStore s(PhiSnapshot{0, {0.0, 0.5}, {0.0, 0.5}});
  CHECK(s.get_phi().version == 0);
  CHECK_FALSE(s.put_phi({2, {0, 0}, {0, 0}}));
  CHECK_FALSE(s.put_phi({0, {0, 0}, {0, 0}}));
  CHECK_FALSE(s.put_phi({1, {0}, {0}}));
  CHECK(s.put_phi({1, {-0.1, 0.5}, {0.0, 0.5}}));
  CHECK(s.get_phi().low[0] == -0.1);
  CHECK(s.phi_history().size() == 2);

  CHECK_FALSE(s.get_theta());
  auto t = tiny_theta();
  t.version = 7;
  CHECK(s.put_theta(t));
  CHECK_FALSE(s.put_theta(t));
  t.version = 8;
  CHECK(s.put_theta(t));
  CHECK(s.get_theta()->version == 8);

  s.push_perf({0, Side::High, 1.0});
  s.push_perf({1, Side::Low, 2.0});
  const auto d = s.drain_perf();
  REQUIRE(d.size() == 2);
  CHECK(d[0].p == 1.0);
  CHECK(d[1].side == Side::Low);
  CHECK(s.drain_perf().empty());
  const auto c = s.counters();
  CHECK(c.perf_pushed == 2);
  CHECK(c.perf_drained == 2);
  CHECK(c.phi_accepted == 1);
  CHECK(c.phi_rejected == 3);
}

TEST_CASE("frame encoding") {
  const nlohmann::json m{{"op", "get_phi"}};
  const auto f = encode_frame(m);
  const std::string body = m.dump();
  REQUIRE(f.size() == body.size() + 4);
  CHECK(static_cast<unsigned char>(f[0]) == 0);
  CHECK(static_cast<unsigned char>(f[3]) == body.size());
  CHECK(f.substr(4) == body);
  const auto big = encode_frame(nlohmann::json{{"x", std::string(300, 'a')}});
  const std::uint32_t n = (std::uint32_t(static_cast<unsigned char>(big[2])) << 8) |
                          static_cast<unsigned char>(big[3]);
  CHECK(n == big.size() - 4);
  CHECK(decode_body(body) == m);
  try {
    decode_body("{\"op\": ");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.position() > 0);
  }
}

TEST_CASE("request dispatch") {
  InProcessStore s(PhiSnapshot{0, {0.0}, {0.0}});
  using nlohmann::json;
  CHECK(handle_request(s, {{"op", "get_phi"}})["version"] == 0);
  auto r = handle_request(s, {{"op", "put_phi"}, {"version", 1}, {"phi_low", {-0.5}}, {"phi_high", {0.0}}});
  CHECK(r["ok"] == true);
  CHECK(r["accepted"] == true);
  CHECK(handle_request(s, {{"op", "push_perf"}, {"dim", 0}, {"side", "H"}, {"p", 3.5}})["ok"] == true);
  r = handle_request(s, {{"op", "drain_perf"}});
  REQUIRE(r["records"].size() == 1);
  CHECK(r["records"][0]["side"] == "H");
  CHECK(handle_request(s, {{"op", "get_theta"}})["theta"].is_null());
  CHECK(handle_request(s, {{"op", "put_theta"}, {"theta", to_json(tiny_theta())}})["accepted"] == true);
  CHECK(handle_request(s, {{"op", "get_theta"}})["theta"]["version"] == 0);
  const Rollout ro{0, 1, {0.1}, 5, 2.0, 0.0};
  CHECK(handle_request(s, {{"op", "push_rollout"}, {"rollout", to_json(ro)}})["ok"] == true);
  CHECK(handle_request(s, {{"op", "drain_rollouts"}})["records"].size() == 1);
  CHECK(handle_request(s, {{"op", "stats"}})["perf_pushed"] == 1);

  CHECK(handle_request(s, {{"op", "explode"}})["ok"] == false);
  CHECK(handle_request(s, json::array())["ok"] == false);
  CHECK(handle_request(s, {{"op", "push_perf"}, {"dim", 0}, {"side", "Q"}, {"p", 1}})["ok"] == false);
}

TEST_CASE("socket store matches the in-process store") {
  InProcessStore backend(PhiSnapshot{0, {0.0, 0.5}, {0.0, 0.5}});
  StoreServer server(backend);
  server.start();
  REQUIRE(server.port() != 0);
  SocketStore client("127.0.0.1", server.port());
  CHECK(client.get_phi() == backend.get_phi());
  CHECK(client.put_phi({1, {-0.02, 0.5}, {0.0, 0.52}}));
  CHECK_FALSE(client.put_phi({1, {-0.02, 0.5}, {0.0, 0.52}}));
  CHECK(backend.get_phi().high[1] == 0.52);
  CHECK_FALSE(client.get_theta());
  CHECK(client.put_theta(tiny_theta()));
  CHECK(client.get_theta()->parameters == tiny_theta().parameters);
  client.push_rollout({0, 2, {0.25, 0.5}, 9, 4.0, -1.0});
  const auto ro = client.drain_rollouts();
  REQUIRE(ro.size() == 1);
  CHECK(ro[0].lambda == std::vector<double>{0.25, 0.5});

  // Several clients appending concurrently.
  constexpr int kThreads = 4;
  constexpr int kEach = 500;
  std::vector<std::thread> ts;
  for (int t = 0; t < kThreads; ++t) {
    ts.emplace_back([&, t] {
      SocketStore c("127.0.0.1", server.port());
      for (int i = 0; i < kEach; ++i) c.push_perf({std::size_t(t % 2), Side::High, double(i)});
    });
  }
  for (auto& t : ts) t.join();
  CHECK(client.drain_perf().size() == kThreads * kEach);
  CHECK(client.counters().perf_pushed == kThreads * kEach);
  CHECK_THROWS_AS(client.call({{"op", "nope"}}), DataError);
  server.stop();
  CHECK_THROWS_AS(client.get_phi(), StoreUnavailable);
}

TEST_CASE("retry with backoff, then worker exit") {
  RetryPolicy policy{3, std::chrono::milliseconds(1), 2.0};
  int calls = 0;
  CHECK_THROWS_AS(with_retry(policy,
                             [&]() -> int {
                               ++calls;
                               throw StoreUnavailable("down");
                             }),
                  StoreUnavailable);
  CHECK(calls == 3);
  calls = 0;
  CHECK(with_retry(policy, [&] {
          if (++calls < 2) throw StoreUnavailable("flaky");
          return 5;
        }) == 5);
  CHECK(calls == 2);

  // Nothing listens on the port of a stopped server.
  InProcessStore backend(PhiSnapshot{0, {0.0}, {0.0}});
  std::uint16_t port = 0;
  {
    StoreServer server(backend);
    server.start();
    port = server.port();
  }
  SocketStore dead("127.0.0.1", port, 200);
  WorkerContext ctx;
  ctx.layout = init_from_calibration({{"a", 0.0, ""}});
  ctx.runner = constant_runner(1.0);
  ctx.retry = policy;
  Rng rng(1);
  std::atomic<bool> stop{false};
  std::atomic<long> budget{10};
  EventLog log;
  CHECK(worker_loop(WorkerRole::Combined, dead, ctx, rng, stop, budget, &log) ==
        WorkerExit::StoreUnreachable);
  CHECK(budget == 10);
  CHECK(log.size() == 1);
}

TEST_CASE("boundary sampling coin splits episodes") {
  InProcessStore s(phi_snapshot(init_from_calibration(two_dims()), 0));
  s.put_theta(tiny_theta());
  WorkerContext ctx;
  ctx.layout = init_from_calibration(two_dims());
  ctx.runner = constant_runner(3.0);
  ctx.boundary_prob = 0.5;
  Rng rng(2024);
  constexpr int n = 10000;
  int evals = 0;
  for (int i = 0; i < n; ++i) {
    evals += worker_episode(WorkerRole::Combined, s, ctx, rng)->kind == EpisodeKind::AdrEval;
  }
  const double sigma = std::sqrt(n * 0.25);
  CHECK(std::abs(evals - n / 2) <= 3 * sigma);
  const auto c = s.counters();
  CHECK(c.perf_pushed == std::uint64_t(evals));
  CHECK(c.rollouts_pushed == std::uint64_t(n));  // eval episodes train too

  ctx.train_on_eval = false;
  ctx.boundary_prob = 0.0;
  InProcessStore s0(phi_snapshot(init_from_calibration(two_dims()), 0));
  s0.put_theta(tiny_theta());
  for (int i = 0; i < 500; ++i) {
    CHECK(worker_episode(WorkerRole::Combined, s0, ctx, rng)->kind == EpisodeKind::Rollout);
  }
  CHECK(s0.counters().perf_pushed == 0);
  CHECK(s0.counters().rollouts_pushed == 500);

  InProcessStore empty(phi_snapshot(init_from_calibration(two_dims()), 0));
  CHECK_FALSE(worker_episode(WorkerRole::Rollout, empty, ctx, rng).has_value());
  CHECK_THROWS_AS(worker_episode(WorkerRole::Updater, s0, ctx, rng), ContractError);
}

TEST_CASE("stale phi results are still accepted") {
  const auto init = init_from_calibration(two_dims());
  InProcessStore s(phi_snapshot(init, 0));
  s.put_theta(tiny_theta());
  WorkerContext ctx;
  ctx.layout = init;
  ctx.runner = [&](std::span<const double>, const LearnerSnapshot&, std::size_t, std::uint64_t) {
    s.put_phi({s.get_phi().version + 1, {-1.0, 0.0}, {1.0, 1.0}});  // updater advances mid-episode
    return EpisodeResult{17.0, 0.0};
  };
  Rng rng(3);
  const auto ep = worker_episode(WorkerRole::AdrEval, s, ctx, rng);
  CHECK(ep->phi_version == 0);
  CHECK(s.get_phi().version == 1);
  const auto recs = s.drain_perf();
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].p == 17.0);
  CHECK(ep->lambda == std::vector<double>{0.0, 0.5});
}

TEST_CASE("updater applies the buffer law and publishes once") {
  AdrConfig cfg;  // 0.02 step, t_L 10, t_H 20, m 240
  const auto init = init_from_calibration(two_dims(), cfg);
  InProcessStore s(phi_snapshot(init, 0));
  Updater u(init, cfg);
  EventLog log;
  for (int i = 0; i < 240; ++i) s.push_perf({1, Side::High, 25.0});
  CHECK(u.step(s, 1, &log) == 240);
  const auto phi = s.get_phi();
  CHECK(phi.version == 1);
  CHECK(phi.low == std::vector<double>{0.0, 0.5});
  CHECK(phi.high[0] == 0.0);
  CHECK(phi.high[1] == doctest::Approx(0.52).epsilon(1e-15));
  const auto lines = log.lines();
  REQUIRE(lines.size() == 2);
  CHECK(lines[0]["side"] == "H");
  CHECK(lines[1]["type"] == "phi");

  for (int i = 0; i < 239; ++i) s.push_perf({0, Side::Low, 30.0});
  u.step(s, 2, &log);
  CHECK(s.get_phi().version == 1);
  CHECK(u.version() == 1);
  CHECK(u.buffers().values(0, Side::Low).size() == 239);

  s.push_perf({9, Side::Low, 30.0});
  u.step(s, 3, &log);
  CHECK(u.dropped() == 1);
  CHECK(log.lines().back()["type"] == "dropped_perf");
  CHECK(u.consumed() == 480);
}

TEST_CASE("trainer drops stale rollouts and batches by population") {
  LearnerConfig lc;
  lc.obs_dim = 1;
  lc.act_dim = 1;
  lc.population = 4;
  auto learner = std::make_shared<CemLearner>(lc);
  InProcessStore s(PhiSnapshot{0, {0.0}, {0.0}});
  Trainer tr(learner, learner->initial(), 4);
  tr.publish_initial(s);
  CHECK(s.get_theta()->version == 0);
  for (std::size_t k = 0; k < 3; ++k) s.push_rollout({0, k, {0.0}, k, 1.0, 0.0});
  s.push_rollout({5, 0, {0.0}, 0, 1.0, 0.0});
  CHECK_FALSE(tr.step(s, 1, nullptr));
  CHECK(tr.stale() == 1);
  s.push_rollout({0, 3, {0.0}, 3, 2.0, 0.0});
  CHECK(tr.step(s, 2, nullptr));
  CHECK(s.get_theta()->version == 1);
  s.push_rollout({0, 3, {0.0}, 3, 2.0, 0.0});
  CHECK_FALSE(tr.step(s, 3, nullptr));
  CHECK(tr.stale() == 2);
}

TEST_CASE("concurrent appends and drains conserve every record") {
  InProcessStore s(PhiSnapshot{0, {0.0}, {0.0}});
  constexpr int kWorkers = 8;
  constexpr int kEach = 12500;
  std::atomic<bool> done{false};
  std::uint64_t drained = 0;
  std::thread drainer([&] {
    while (!done) drained += s.drain_perf().size();
    drained += s.drain_perf().size();
  });
  std::vector<std::thread> ws;
  for (int w = 0; w < kWorkers; ++w) {
    ws.emplace_back([&, w] {
      for (int i = 0; i < kEach; ++i) s.push_perf({0, Side::High, double(w)});
    });
  }
  for (auto& t : ws) t.join();
  done = true;
  drainer.join();
  CHECK(drained == std::uint64_t(kWorkers) * kEach);
  CHECK(s.counters().perf_pushed == drained);
}

TEST_CASE("competing phi writers never share a version") {
  InProcessStore s(PhiSnapshot{0, {0.0}, {0.0}});
  std::vector<std::thread> ts;
  for (int w = 0; w < 4; ++w) {
    ts.emplace_back([&, w] {
      for (int i = 0; i < 2000; ++i) {
        const auto cur = s.get_phi();
        s.put_phi({cur.version + 1, {-0.001 * w}, {0.001 * i}});
      }
    });
  }
  for (auto& t : ts) t.join();
  const auto h = s.phi_history();
  std::set<std::uint64_t> versions;
  for (const auto& p : h) CHECK(versions.insert(p.version).second);
  CHECK(versions.size() == h.size());
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i].version == i);
}

TEST_CASE("deterministic mode is byte-identical") {
  auto cfg = fake_experiment(20.0);
  cfg.adr.buffer_size = 5;
  cfg.adr.step_size = 0.1;
  cfg.adr.phi_max = 1.0;
  EventLog a;
  EventLog b;
  const auto ra = run_deterministic(cfg, 11, 400, a);
  run_deterministic(cfg, 11, 400, b);
  CHECK(a.text() == b.text());
  CHECK(a.size() > 10);
  EventLog other;
  run_deterministic(cfg, 12, 400, other);
  CHECK(other.text() != a.text());
  CHECK(ra.counters.perf_pushed == ra.eval_episodes);
  CHECK(ra.final_theta.version == 400 / 8);

  EventLog zero;
  const auto rz = run_deterministic(cfg, 11, 0, zero);
  REQUIRE(zero.size() == 1);
  CHECK(zero.lines()[0]["type"] == "phi");
  CHECK(rz.phi_version == 0);
}

TEST_CASE("always-high performer grows entropy until phi_max") {
  auto cfg = fake_experiment(20.0);
  cfg.adr.buffer_size = 3;
  cfg.adr.step_size = 0.25;
  cfg.adr.phi_max = 1.5;
  cfg.workers = 3;
  EventLog log;
  const auto r = run_deterministic(cfg, 5, 2000, log);
  double last = -INFINITY;
  double last_width = 0.0;
  int phis = 0;
  for (const auto& l : log.lines()) {
    if (l.value("type", "") != "phi") continue;
    const double h = entropy_from_json(l["entropy_npd"]);
    double width = 0.0;
    for (std::size_t i = 0; i < 2; ++i) width += l["phi_high"][i].get<double>() - l["phi_low"][i].get<double>();
    // While some width is still zero the entropy stays at -inf; total width must grow instead.
    if (phis++ > 0) CHECK((h > last || (std::isinf(h) && width > last_width)));
    last = h;
    last_width = width;
  }
  CHECK(phis > 5);
  CHECK(r.final_phi.low(0) == -1.5);
  CHECK(r.final_phi.high(0) == 1.5);
  CHECK(r.final_phi.low(1) == -1.5);
  CHECK(r.final_phi.high(1) == 1.5);
}

TEST_CASE("fixed-DR runs never move phi") {
  auto cfg = fake_experiment(20.0);
  cfg.adr_enabled = false;
  cfg.initial_bounds = {{-0.5, 0.5}, {0.5, 1.5}};
  EventLog log;
  const auto r = run_deterministic(cfg, 1, 200, log);
  CHECK(r.phi_version == 0);
  CHECK(r.counters.perf_pushed == 0);
  CHECK(r.final_phi.low(0) == -0.5);
}

TEST_CASE("concurrent mode conserves records over sockets") {
  auto cfg = fake_experiment(20.0);
  cfg.adr.buffer_size = 4;
  cfg.adr.step_size = 0.05;
  cfg.workers = 4;
  const auto init = initial_distribution(cfg);
  InProcessStore backend(phi_snapshot(init, 0));
  StoreServer server(backend);
  server.start();
  SocketStore client("127.0.0.1", server.port());
  EventLog log;
  const auto r = run_concurrent(cfg, 3, 2000, log, &client);
  server.stop();
  CHECK(r.episodes == 2000);
  const auto c = backend.counters();
  CHECK(c.perf_pushed == c.perf_drained);
  CHECK(c.rollouts_pushed == 2000);
  CHECK(c.rollouts_pushed == c.rollouts_drained);
  const auto h = backend.phi_history();
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i].version == i);
  CHECK(r.phi_version == h.back().version);
  CHECK(entropy(r.final_phi) > -INFINITY);
}
