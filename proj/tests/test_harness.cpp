#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "doctest.h"

#include "adr/errors.hpp"
#include "adr/harness.hpp"
#include "adr/report.hpp"
#include "adr/run_config.hpp"

using namespace adr;

namespace {

// Builds a record whose successes occur at the cumulative sums of `gaps`.
TrialRecord synthetic(std::vector<double> gaps, Termination term) {
  TrialRecord r;
  r.env = "reacher";
  double t = 0.0;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    t += gaps[i];
    r.successes.push_back({static_cast<int>(i + 1), t, std::nullopt});
  }
  r.termination = term;
  return r;
}

struct Oracle {
  std::vector<double> mean, se, hazard;
  std::vector<std::size_t> alive, failed;
};

// Direct arithmetic, independent of the library loop structure.
Oracle oracle(const std::vector<TrialRecord>& recs, int n) {
  Oracle o;
  for (int i = 1; i <= n; ++i) {
    std::vector<double> g;
    std::size_t alive = 0, failed = 0;
    for (const auto& r : recs) {
      const int p = r.performance();
      if (p >= i - 1) ++alive;
      if (r.termination != Termination::Completed50 && p == i - 1) ++failed;
      if (r.termination == Termination::Completed50) {
        const double prev = i == 1 ? 0.0 : r.successes[static_cast<std::size_t>(i - 2)].time;
        g.push_back(r.successes[static_cast<std::size_t>(i - 1)].time - prev);
      }
    }
    double m = std::numeric_limits<double>::quiet_NaN(), se = m;
    if (!g.empty()) {
      double s = 0.0;
      for (double x : g) s += x;
      m = s / static_cast<double>(g.size());
      if (g.size() > 1) {
        double ss = 0.0;
        for (double x : g) ss += (x - m) * (x - m);
        se = std::sqrt(ss / static_cast<double>(g.size() - 1)) / std::sqrt(static_cast<double>(g.size()));
      }
    }
    o.mean.push_back(m);
    o.se.push_back(se);
    o.alive.push_back(alive);
    o.failed.push_back(failed);
    o.hazard.push_back(alive ? static_cast<double>(failed) / static_cast<double>(alive)
                             : std::numeric_limits<double>::quiet_NaN());
  }
  return o;
}

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::vector<TrialRecord> random_records(std::size_t count, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrialRecord> out;
  for (std::size_t k = 0; k < count; ++k) {
    const bool done = rng.coin(0.4);
    const auto p = done ? static_cast<std::size_t>(n) : rng.index(static_cast<std::size_t>(n));
    std::vector<double> gaps(p);
    // Multiples of the 0.08 s step, as the environments report.
    for (auto& g : gaps) g = 0.08 * static_cast<double>(1 + rng.index(40));
    out.push_back(synthetic(gaps, done ? Termination::Completed50
                                       : (rng.coin(0.5) ? Termination::Dropped : Termination::TimedOut)));
  }
  return out;
}

RunConfig small_reacher() {
  RunConfig c;
  c.env = EnvKind::Reacher;
  c.catalog = default_catalog(EnvKind::Reacher);
  c.episode = EpisodeConfig::defaults_for(EnvKind::Reacher);
  return c;
}

}  // namespace

TEST_CASE("success-index statistics on hand-built records") {
  // n = 3; gaps for the two completed trials are {1,2,3} and {3,2,1}.
  const std::vector<TrialRecord> recs{
      synthetic({1.0, 2.0, 3.0}, Termination::Completed50),
      synthetic({3.0, 2.0, 1.0}, Termination::Completed50),
      synthetic({}, Termination::TimedOut),
      synthetic({0.5}, Termination::Dropped),
      synthetic({0.5, 0.25}, Termination::TimedOut),
  };
  const auto s = success_index_stats(recs, 3);
  CHECK(s.trials == 5);
  CHECK(s.completed == 2);
  CHECK(s.mean_time == std::vector<double>{2.0, 2.0, 2.0});
  CHECK(s.stderr_time[0] == 1.0);  // sd sqrt(2), n 2
  CHECK(s.stderr_time[1] == 0.0);
  CHECK(s.stderr_time[2] == 1.0);
  CHECK(s.alive == std::vector<std::size_t>{5, 4, 3});
  CHECK(s.failed == std::vector<std::size_t>{1, 1, 1});
  CHECK(s.failure_prob == std::vector<double>{0.2, 0.25, 1.0 / 3.0});
  CHECK(s.completion_fraction() == 0.4);
  CHECK(std::abs(s.survival_product() - 0.4) <= 1e-12);
}

TEST_CASE("success-index statistics match the direct-arithmetic oracle") {
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    const auto recs = random_records(300, 50, seed);
    const auto s = success_index_stats(recs, 50);
    const auto o = oracle(recs, 50);
    for (std::size_t i = 0; i < 50; ++i) {
      CHECK(same(s.mean_time[i], o.mean[i]));
      CHECK(same(s.stderr_time[i], o.se[i]));
      CHECK(s.alive[i] == o.alive[i]);
      CHECK(s.failed[i] == o.failed[i]);
      CHECK(same(s.failure_prob[i], o.hazard[i]));
      if (s.alive[i]) {
        CHECK(s.failure_prob[i] >= 0.0);
        CHECK(s.failure_prob[i] <= 1.0);
      }
    }
    std::size_t completed = 0;
    for (const auto& r : recs) completed += r.termination == Termination::Completed50;
    CHECK(std::abs(s.survival_product() - static_cast<double>(completed) / 300.0) <= 1e-12);
  }
}

TEST_CASE("failed trials never enter the time statistics") {
  std::vector<TrialRecord> recs{synthetic(std::vector<double>(3, 1.0), Termination::Completed50),
                                synthetic({100.0, 100.0}, Termination::Dropped)};
  const auto s = success_index_stats(recs, 3);
  CHECK(s.mean_time == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(std::isnan(s.stderr_time[0]));
}

TEST_CASE("no trials and no completions give undefined statistics") {
  const auto empty = success_index_stats({}, 50);
  CHECK(empty.trials == 0);
  CHECK(std::isnan(empty.mean_time[0]));
  CHECK(std::isnan(empty.failure_prob[0]));
  CHECK(empty.survival_product() == 1.0);

  const std::vector<TrialRecord> all_fail{synthetic({}, Termination::TimedOut)};
  const auto s = success_index_stats(all_fail, 5);
  CHECK(s.failure_prob[0] == 1.0);
  CHECK(std::isnan(s.failure_prob[1]));
  CHECK(s.survival_product() == 0.0);
}

TEST_CASE("inconsistent records are rejected") {
  CHECK_THROWS_AS(success_index_stats(std::vector{synthetic({1.0}, Termination::Completed50)}, 3),
                  DataError);
  CHECK_THROWS_AS(success_index_stats(std::vector{synthetic({1.0, 1.0, 1.0}, Termination::Dropped)}, 3),
                  DataError);
  auto r = synthetic({1.0, 1.0}, Termination::TimedOut);
  r.successes[1].time = 0.5;
  CHECK_THROWS_AS(success_index_stats(std::vector{r}, 3), DataError);
}

TEST_CASE("perturbation spec validation") {
  CHECK_NOTHROW(PerturbationSpec{}.validate());
  CHECK_THROWS_AS((PerturbationSpec{PerturbationKind::BreakJoint, {30, 10}}.validate()), ConfigError);
  CHECK_THROWS_AS((PerturbationSpec{PerturbationKind::BreakJoint, {10, 10}}.validate()), ConfigError);
  CHECK_THROWS_AS((PerturbationSpec{PerturbationKind::BreakJoint, {0}}.validate()), ConfigError);
  CHECK_THROWS_AS((PerturbationSpec{PerturbationKind::BreakJoint, {50}}.validate()), ConfigError);
  CHECK(parse_perturbation("resample_dynamics") == PerturbationKind::ResampleDynamics);
  CHECK_THROWS_AS(parse_perturbation("explode"), ConfigError);
}

TEST_CASE("triggers fire exactly after the 10th and 30th success") {
  auto rc = small_reacher();
  rc.trials = 200;
  const auto lambdas = AdrDistribution(rc.catalog.dims(), std::vector<double>(6, -0.3),
                                       std::vector<double>(6, 0.6));
  for (const auto kind : {PerturbationKind::ResetMemory, PerturbationKind::ResampleDynamics,
                          PerturbationKind::BreakJoint}) {
    const auto report = run_perturbation_experiment(rc.perturbation(kind, 5), rc.controllers(), lambdas);
    const auto* s = report.find("perturbed");
    REQUIRE(s != nullptr);
    REQUIRE(s->trials.size() == 200);
    std::size_t reached_10 = 0, reached_30 = 0;
    for (const auto& t : s->trials) {
      std::vector<int> expect;
      for (const int k : {10, 30}) {
        if (t.record.performance() >= k) expect.push_back(k);
      }
      CHECK(t.fired == expect);
      reached_10 += t.record.performance() >= 10;
      reached_30 += t.record.performance() >= 30;
      if (kind == PerturbationKind::BreakJoint) {
        CHECK(t.broken.size() == expect.size());
        CHECK(std::set<std::size_t>(t.broken.begin(), t.broken.end()).size() == t.broken.size());
      }
    }
    CHECK(reached_10 > 100);
    // A one-axis Reacher rarely gets past the first break.
    if (kind != PerturbationKind::BreakJoint) CHECK(reached_30 > 20);
    const auto* base = report.find("baseline");
    REQUIRE(base != nullptr);
    for (const auto& t : base->trials) CHECK(t.fired.empty());
    CHECK((report.find("broken_from_start") != nullptr) == (kind == PerturbationKind::BreakJoint));
  }
}

TEST_CASE("broken-from-start baseline breaks one coordinate before the first step") {
  auto rc = small_reacher();
  rc.trials = 20;
  const auto lambdas = init_from_calibration(rc.catalog.dims());
  const auto report = run_perturbation_experiment(rc.perturbation(PerturbationKind::BreakJoint, 1),
                                                  rc.controllers(), lambdas);
  const auto* s = report.find("broken_from_start");
  REQUIRE(s != nullptr);
  for (const auto& t : s->trials) {
    REQUIRE(t.broken.size() == 1);
    CHECK(t.broken[0] < 2);
    // A one-axis Reacher cannot reach targets off that axis.
    CHECK(t.record.performance() < 50);
  }
}

TEST_CASE("series share lambda and seed per trial and ignore the thread count") {
  auto rc = small_reacher();
  rc.trials = 24;
  const auto lambdas = AdrDistribution(rc.catalog.dims(), std::vector<double>(6, 0.0),
                                       std::vector<double>(6, 0.5));
  auto one = rc.perturbation(PerturbationKind::ResampleDynamics, 9);
  auto many = one;
  many.threads = 3;
  const auto a = run_perturbation_experiment(one, rc.controllers(), lambdas);
  const auto b = run_perturbation_experiment(many, rc.controllers(), lambdas);
  for (std::size_t s = 0; s < a.series.size(); ++s) {
    for (std::size_t i = 0; i < rc.trials; ++i) {
      CHECK(to_json(a.series[s].trials[i].record) == to_json(b.series[s].trials[i].record));
    }
  }
  for (std::size_t i = 0; i < rc.trials; ++i) {
    CHECK(a.series[0].trials[i].record.lambda == a.series[1].trials[i].record.lambda);
    CHECK(a.series[0].trials[i].record.seed == a.series[1].trials[i].record.seed);
  }
}

TEST_CASE("resetting a memoryless policy changes nothing") {
  auto rc = small_reacher();
  rc.catalog = noiseless_reacher_catalog();
  rc.trials = 200;
  const auto lambdas = init_from_calibration(rc.catalog.dims());
  LearnerConfig lc = rc.learner_config();
  lc.memory = false;
  // Proportional gain on the error, no trace inputs: W = [[4,0,0],[0,4,0]].
  const std::vector<double> w{4.0, 0.0, 0.0, 0.0, 4.0, 0.0};
  const ControllerFactory policy = [&] { return std::make_unique<PolicyController>(lc, w); };
  const auto report = run_perturbation_experiment(rc.perturbation(PerturbationKind::ResetMemory, 3),
                                                  policy, lambdas);
  const auto& pert = report.find("perturbed")->stats;
  const auto& base = report.find("baseline")->stats;
  REQUIRE(pert.completed > 100);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(same(pert.mean_time[i], base.mean_time[i]));
    CHECK(same(pert.failure_prob[i], base.failure_prob[i]));
  }
  // Goal durations are exchangeable across indices: compare the index right
  // after each trigger with the one before it.
  for (const int t : {10, 30}) {
    const auto before = static_cast<std::size_t>(t - 1), after = static_cast<std::size_t>(t);
    const double se = std::hypot(pert.stderr_time[before], pert.stderr_time[after]);
    CHECK(std::abs(pert.mean_time[after] - pert.mean_time[before]) <= 2.0 * se);
  }
}

TEST_CASE("perturbation metadata records the failure denominator") {
  auto rc = small_reacher();
  rc.trials = 4;
  const auto report = run_perturbation_experiment(rc.perturbation(PerturbationKind::ResetMemory, 0),
                                                  rc.controllers(), init_from_calibration(rc.catalog.dims()));
  const auto m = report.metadata();
  CHECK(m["failure_denominator"] == std::string(kFailureDenominator));
  CHECK(m["triggers"] == nlohmann::json::array({10, 30}));
  CHECK(m["series"].size() == 2);
}

TEST_CASE("CSV number formatting round-trips") {
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double x = rng.normal(0.0, 1.0) * std::pow(10.0, rng.uniform(-30, 30));
    CHECK(parse_double(format_double(x)) == x);
  }
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(parse_double("-inf") == -std::numeric_limits<double>::infinity());
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()).empty());
  CHECK(std::isnan(parse_double("")));
  CHECK_THROWS_AS(parse_double("1.5x"), ParseError);
}

TEST_CASE("empty record sets give header-only CSV") {
  CHECK(entropy_csv({}) == std::string(kEntropyCsvHeader) + "\n");
  CHECK(success_index_csv({}) == std::string(kSuccessIndexCsvHeader) + "\n");
  CHECK(curriculum_csv({}) == std::string(kCurriculumCsvHeader) + "\n");
  CHECK(parse_entropy_csv(entropy_csv({})).empty());
}

TEST_CASE("entropy timeline CSV round-trips bit-exactly") {
  std::vector<EntropyPoint> pts{{0, 0, -std::numeric_limits<double>::infinity()}};
  Rng rng(8);
  for (std::uint64_t v = 1; v < 500; ++v) pts.push_back({v * 37, v, rng.normal(-1.0, 2.0)});
  pts.push_back({99999, 500, 0.1 + 0.2});
  const auto back = parse_entropy_csv(entropy_csv(pts));
  REQUIRE(back.size() == pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(back[i].t == pts[i].t);
    CHECK(back[i].version == pts[i].version);
    CHECK(std::bit_cast<std::uint64_t>(back[i].entropy) == std::bit_cast<std::uint64_t>(pts[i].entropy));
  }
  CHECK_THROWS_AS(parse_entropy_csv("t,version\n"), ParseError);
  CHECK_THROWS_AS(parse_entropy_csv(std::string(kEntropyCsvHeader) + "\n1,2\n"), ParseError);
}

TEST_CASE("entropy timeline comes from the phi records of a run") {
  ExperimentConfig x;
  x.env = EnvKind::Reacher;
  x.catalog = default_catalog(EnvKind::Reacher);
  x.episode = EpisodeConfig::defaults_for(EnvKind::Reacher);
  x.adr.buffer_size = 5;
  x.adr.step_size = 0.1;
  x.learner = RunConfig{}.learner_config();
  x.learner.population = 8;
  EventLog log;
  const auto res = run_deterministic(x, 1, 400, log);
  const auto lines = log.lines();
  const auto tl = entropy_timeline(lines);
  REQUIRE(!tl.empty());
  CHECK(tl.front().version == 0);
  CHECK(std::isinf(tl.front().entropy));
  CHECK(tl.back().version == res.phi_version);
  for (std::size_t i = 1; i < tl.size(); ++i) CHECK(tl[i].version == tl[i - 1].version + 1);
}

TEST_CASE("perturbation plots show the baseline and perturbed series with trigger markers") {
  auto rc = small_reacher();
  rc.trials = 10;
  const auto report = run_perturbation_experiment(rc.perturbation(PerturbationKind::ResetMemory, 0),
                                                  rc.controllers(), init_from_calibration(rc.catalog.dims()));
  const auto svg = perturbation_time_svg(report);
  const auto count = [&](std::string_view needle) {
    std::size_t n = 0;
    for (auto p = svg.find(needle); p != std::string::npos; p = svg.find(needle, p + 1)) ++n;
    return n;
  };
  CHECK(count("class=\"series\"") == 2);
  CHECK(count("data-name=\"baseline\"") == 1);
  CHECK(count("data-name=\"perturbed\"") == 1);
  CHECK(count("class=\"marker\"") == 2);
  CHECK(svg.rfind("<svg", 0) == 0);

  const auto csv = success_index_csv(report.series);
  std::size_t rows = 0;
  for (const char c : csv) rows += c == '\n';
  CHECK(rows == 1 + 2 * 50);
}

TEST_CASE("report files land in the directory and bad paths raise IoError") {
  const auto dir = std::filesystem::temp_directory_path() / "adr_report_test";
  std::filesystem::remove_all(dir);
  auto rc = small_reacher();
  rc.trials = 3;
  const auto report = run_perturbation_experiment(rc.perturbation(PerturbationKind::BreakJoint, 0),
                                                  rc.controllers(), init_from_calibration(rc.catalog.dims()));
  const auto files = emit_perturbation_report(report, dir);
  for (const auto& f : files) CHECK(std::filesystem::exists(dir / f));
  write_manifest(dir, "perturb-exp", rc.to_json(), files);
  const auto manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
  CHECK(manifest["files"].size() == files.size());
  CHECK(manifest["command"] == "perturb-exp");

  write_text(dir / "plain", "x");
  CHECK_THROWS_AS(write_text(dir / "plain" / "child.csv", "y"), IoError);
  CHECK_THROWS_AS(read_text(dir / "missing.json"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("zero-episode curriculum comparison reports the initial points only") {
  auto cc = reacher_curriculum_preset().curriculum();
  cc.budget = 0;
  const auto r = run_curriculum_comparison(cc, 0);
  REQUIRE(r.runs.size() == 5);
  for (const auto& run : r.runs) {
    REQUIRE(run.curve.size() == 1);
    CHECK(run.curve[0].episodes == 0);
    CHECK(std::isinf(run.curve[0].entropy));
  }
}

TEST_CASE("curriculum curves: ADR entropy grows without shrinks, fixed-DR entropy is flat") {
  auto cc = reacher_curriculum_preset().curriculum();
  cc.budget = 1280;
  cc.eval_interval = 128;
  cc.eval_episodes = 10;
  cc.experiment.adr.threshold_low = -1.0;  // rules out Shrink
  const auto r = run_curriculum_comparison(cc, 1);
  const auto& adr = r.run("adr");
  REQUIRE(adr.curve.size() == 11);
  for (std::size_t i = 1; i < adr.curve.size(); ++i) {
    CHECK(adr.curve[i].entropy >= adr.curve[i - 1].entropy);
    CHECK(adr.curve[i].episodes == 128 * i);
  }
  CHECK(r.threshold == 0.8 * adr.curve.back().eval);
  CHECK(adr.phi == r.runs.back().phi);  // XL trains on the final range
  for (std::size_t k = 1; k < r.runs.size(); ++k) {
    for (const auto& p : r.runs[k].curve) CHECK(same(p.entropy, r.runs[k].curve[0].entropy));
    CHECK(r.runs[k].curve.size() == adr.curve.size());
  }
  // The snapshot runs train on ranges that only widen with the fraction.
  for (std::size_t k = 2; k < r.runs.size(); ++k) {
    for (std::size_t d = 0; d < r.runs[k].phi.size(); ++d) {
      CHECK(r.runs[k].phi.width(d) >= r.runs[k - 1].phi.width(d));
    }
  }
  const auto j = r.to_json();
  CHECK(j["runs"].size() == 5);
}

TEST_CASE("episodes to threshold is the first eval point at or above it") {
  CurriculumReport r;
  r.threshold = 10.0;
  CurriculumRun a{"adr", true, {}, {{0, 0, 0}, {64, 9.9, 0}, {128, 10.0, 0}}, 128};
  CurriculumRun b{"xl", false, {}, {}, std::nullopt};
  r.runs = {a, b};
  CHECK(r.adr_faster_than("xl"));
  r.runs[1].episodes_to_threshold = 128;
  CHECK_FALSE(r.adr_faster_than("xl"));
  r.runs[1].episodes_to_threshold = 192;
  CHECK(r.adr_faster_than("xl"));
  CHECK_THROWS_AS(r.run("medium"), ContractError);
}

TEST_CASE("run config parsing, defaults and round trip") {
  const auto c = RunConfig::from_json(nlohmann::json::parse(R"({
    "env": "reacher",
    "episode": {"timeout_steps": 50},
    "adr": {"step_size": 0.05, "buffer_size": 10},
    "learner": {"memory": false, "population": 16},
    "run": {"seeds": [3, 4], "episodes": 100, "mode": "concurrent", "workers": 2},
    "eval": {"interval": 32},
    "curriculum": {"snapshots": {"big": 1.0, "half": 0.5}},
    "perturbation": {"kinds": ["break_joint"], "trials": 7}
  })"));
  CHECK(c.episode.timeout_steps == 50);
  CHECK(c.adr.threshold_high == 20.0);
  CHECK(c.adr.phi_max == 4.0);
  CHECK(c.learner_config().parameter_count() == 2 * 3);
  CHECK(c.mode == RunMode::Concurrent);
  CHECK(c.snapshots.front().first == "half");
  CHECK(c.perturbation_kinds == std::vector{PerturbationKind::BreakJoint});
  const auto again = RunConfig::from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());

  const auto bad = [](const char* text) { return RunConfig::from_json(nlohmann::json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({"adr": {"stepsize": 0.1}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"colour": 1})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"adr": {"step_size": "big"}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"adr": {"threshold_low": 30}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"run": {"initial_low": [0]}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"run": {"initial_low": [0], "initial_high": [1]}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"perturbation": {"triggers": [30, 10]}})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"env": "cube_ops", "catalog": "noiseless"})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"run": {"mode": "parallel"}})"), ConfigError);
}

TEST_CASE("trial dumps rebuild the same statistics") {
  auto rc = small_reacher();
  rc.trials = 30;
  const auto lambdas = AdrDistribution(rc.catalog.dims(), std::vector<double>(6, 0.0),
                                       std::vector<double>(6, 0.8));
  const auto report = run_perturbation_experiment(rc.perturbation(PerturbationKind::BreakJoint, 2),
                                                  rc.controllers(), lambdas);
  const auto back = perturbation_report_from_jsonl(report.spec, trials_jsonl(report));
  REQUIRE(back.series.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(back.series[s].name == report.series[s].name);
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(back.series[s].trials[i].fired == report.series[s].trials[i].fired);
      CHECK(back.series[s].trials[i].broken == report.series[s].trials[i].broken);
    }
  }
  CHECK(success_index_csv(back.series) == success_index_csv(report.series));
  CHECK_THROWS_AS(perturbation_report_from_jsonl(report.spec, "{\"series\": 1}\n"), DataError);
  CHECK_THROWS_AS(perturbation_report_from_jsonl(report.spec, "{oops\n"), ParseError);
}

TEST_CASE("curriculum report JSON round trip") {
  auto cc = reacher_curriculum_preset().curriculum();
  cc.budget = 128;
  cc.eval_interval = 64;
  cc.eval_episodes = 4;
  cc.snapshots = {{"xl", 1.0}};
  const auto r = run_curriculum_comparison(cc, 4);
  const auto back = curriculum_report_from_json(nlohmann::json::parse(r.to_json().dump()));
  CHECK(back.to_json() == r.to_json());
  CHECK(curriculum_csv(back.runs) == curriculum_csv(r.runs));
}
