// Command-line front end: run-adr, run-fixed-dr, perturb-exp, curriculum, report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "adr/distributed.hpp"
#include "adr/errors.hpp"
#include "adr/harness.hpp"
#include "adr/report.hpp"
#include "adr/run_config.hpp"
#include "adr/store.hpp"

namespace fs = std::filesystem;
using namespace adr;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> episodes;
};

RunConfig load_config(const Common& c) {
  auto rc = c.config.empty() ? RunConfig{} : RunConfig::load(c.config);
  if (!c.seeds.empty()) rc.seeds = c.seeds;
  if (c.episodes) rc.episodes = *c.episodes;
  return rc;
}

Bounds bounds_from_phi_file(const std::string& path, const Catalog& catalog) {
  const auto dist = distribution_from_record(json::parse(read_text(path)));
  if (dist.size() != catalog.size()) throw ConfigError("phi file does not match the catalog");
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist.dims()[i].name != catalog.dims()[i].name) {
      throw ConfigError("phi file dimension names differ from the catalog");
    }
  }
  return {std::vector<double>(dist.low().begin(), dist.low().end()),
          std::vector<double>(dist.high().begin(), dist.high().end())};
}

ExperimentResult run_training(const RunConfig& rc, ExperimentConfig x, std::uint64_t seed,
                              EventLog& log) {
  switch (rc.mode) {
    case RunMode::Deterministic:
      return run_deterministic(x, seed, rc.episodes, log);
    case RunMode::Concurrent:
      return run_concurrent(x, seed, rc.episodes, log);
    case RunMode::Socket: {
      InProcessStore backend(phi_snapshot(initial_distribution(x), 0));
      StoreServer server(backend);
      server.start();
      SocketStore client("127.0.0.1", server.port());
      auto res = run_concurrent(x, seed, rc.episodes, log, &client);
      server.stop();
      return res;
    }
  }
  throw ContractError("unreachable run mode");
}

int train(const Common& c, bool adr_enabled, const std::string& phi_file) {
  auto rc = load_config(c);
  if (!phi_file.empty()) rc.initial_bounds = bounds_from_phi_file(phi_file, rc.catalog);
  const fs::path out(c.out);
  std::vector<std::string> files;
  const auto held_out = rc.held_out_distribution();
  for (const auto seed : rc.seeds) {
    auto x = rc.experiment();
    x.adr_enabled = adr_enabled;
    x.learner.seed = Rng::derive(seed, 1);
    EventLog log;
    const auto res = run_training(rc, x, Rng::derive(seed, 2), log);
    const auto dir = "seed" + std::to_string(seed);
    write_text(out / dir / "events.jsonl", log.text());
    write_text(out / dir / "phi_final.json",
               distribution_record(res.episodes, res.phi_version, res.final_phi).dump(2) + "\n");
    write_text(out / dir / "theta_final.json", to_json(res.final_theta).dump() + "\n");
    const auto lines = log.lines();
    const auto timeline = entropy_timeline(lines);
    for (const auto& f : emit_entropy_report(timeline, out / dir)) files.push_back(dir + "/" + f);
    const double eval =
        evaluate_policy(x, res.final_theta, held_out, rc.eval_episodes, rc.eval_seed);
    const json summary{{"seed", seed},
                       {"episodes", res.episodes},
                       {"phi_version", res.phi_version},
                       {"theta_version", res.final_theta.version},
                       {"entropy_npd", entropy_to_json(entropy(res.final_phi))},
                       {"held_out_eval", eval},
                       {"eval_episodes", res.eval_episodes},
                       {"stale_rollouts", res.stale_rollouts},
                       {"perf_pushed", res.counters.perf_pushed},
                       {"perf_drained", res.counters.perf_drained},
                       {"rollouts_pushed", res.counters.rollouts_pushed},
                       {"phi_rejected", res.counters.phi_rejected}};
    write_text(out / dir / "summary.json", summary.dump(2) + "\n");
    for (const char* f : {"events.jsonl", "phi_final.json", "theta_final.json", "summary.json"}) {
      files.push_back(dir + "/" + f);
    }
    std::cout << "seed " << seed << ": episodes " << res.episodes << ", phi version "
              << res.phi_version << ", entropy " << format_double(entropy(res.final_phi))
              << ", held-out eval " << format_double(eval) << "\n";
  }
  write_manifest(out, adr_enabled ? "run-adr" : "run-fixed-dr", rc.to_json(), files);
  return 0;
}

int perturb(const Common& c, const std::string& policy, const std::string& phi_file,
            const std::vector<std::string>& kinds) {
  auto rc = load_config(c);
  if (!policy.empty()) rc.policy = policy;
  if (!phi_file.empty()) rc.perturbation_lambda = bounds_from_phi_file(phi_file, rc.catalog);
  if (!kinds.empty()) {
    rc.perturbation_kinds.clear();
    for (const auto& k : kinds) rc.perturbation_kinds.push_back(parse_perturbation(k));
  }
  const fs::path out(c.out);
  const auto controllers = rc.controllers();
  const auto lambdas = rc.perturbation_distribution();
  std::vector<std::string> files;
  for (const auto kind : rc.perturbation_kinds) {
    const auto report = run_perturbation_experiment(rc.perturbation(kind, rc.seeds.front()),
                                                    controllers, lambdas);
    const auto name = std::string(perturbation_name(kind));
    write_text(out / (name + "_trials.jsonl"), trials_jsonl(report));
    files.push_back(name + "_trials.jsonl");
    for (const auto& f : emit_perturbation_report(report, out)) files.push_back(f);
    std::cout << name << ":";
    for (const auto& s : report.series) {
      std::cout << " " << s.name << " completed " << s.stats.completed << "/" << s.stats.trials;
    }
    std::cout << "\n";
  }
  write_manifest(out, "perturb-exp", rc.to_json(), files);
  return 0;
}

int curriculum(const Common& c, bool preset) {
  auto rc = preset ? reacher_curriculum_preset() : load_config(c);
  if (preset) {
    if (!c.seeds.empty()) rc.seeds = c.seeds;
    if (c.episodes) rc.episodes = *c.episodes;
  }
  const auto cc = rc.curriculum();
  std::vector<CurriculumReport> reports;
  int wins = 0;
  for (const auto seed : rc.seeds) {
    reports.push_back(run_curriculum_comparison(cc, seed));
    const auto& r = reports.back();
    const auto last = cc.snapshots.empty() ? std::string() : cc.snapshots.back().first;
    std::cout << "seed " << seed << ": threshold " << format_double(r.threshold);
    for (const auto& run : r.runs) {
      std::cout << ", " << run.name << " "
                << (run.episodes_to_threshold ? std::to_string(*run.episodes_to_threshold)
                                              : std::string("never"));
    }
    if (!last.empty()) {
      const bool w = r.adr_faster_than(last);
      wins += w;
      std::cout << (w ? "  (ADR first)" : "  (ADR not first)");
    }
    std::cout << "\n";
  }
  const auto files = emit_curriculum_report(reports, c.out);
  write_manifest(c.out, "curriculum", rc.to_json(), files);
  std::cout << "ADR reached the threshold first in " << wins << " of " << rc.seeds.size()
            << " seeds\n";
  return 0;
}

int report(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const auto manifest = json::parse(read_text(dir / "manifest.json"));
  const auto command = manifest.at("command").get<std::string>();
  const auto rc = RunConfig::from_json(manifest.at("config"));
  std::vector<std::string> files = manifest.at("files").get<std::vector<std::string>>();
  if (command == "run-adr" || command == "run-fixed-dr") {
    for (const auto seed : rc.seeds) {
      const auto sub = "seed" + std::to_string(seed);
      std::vector<json> lines;
      std::istringstream in(read_text(dir / sub / "events.jsonl"));
      for (std::string line; std::getline(in, line);) {
        if (!line.empty()) lines.push_back(json::parse(line));
      }
      for (const auto& f : emit_entropy_report(entropy_timeline(lines), dir / sub)) {
        files.push_back(sub + "/" + f);
      }
    }
  } else if (command == "perturb-exp") {
    for (const auto kind : rc.perturbation_kinds) {
      const auto name = std::string(perturbation_name(kind));
      const auto rep = perturbation_report_from_jsonl(
          {kind, rc.triggers}, read_text(dir / (name + "_trials.jsonl")),
          rc.episode.max_consecutive_successes);
      for (const auto& f : emit_perturbation_report(rep, dir)) files.push_back(f);
    }
  } else if (command == "curriculum") {
    std::vector<CurriculumReport> reports;
    for (const auto& j : json::parse(read_text(dir / "curriculum.json"))) {
      reports.push_back(curriculum_report_from_json(j));
    }
    for (const auto& f : emit_curriculum_report(reports, dir)) files.push_back(f);
  } else {
    throw DataError("manifest names an unknown command: " + command);
  }
  write_manifest(dir, command, manifest.at("config"), files);
  std::cout << "regenerated reports for " << command << " in " << dir.string() << "\n";
  return 0;
}

void add_common(CLI::App* app, Common& c, bool need_config) {
  auto* opt = app->add_option("-c,--config", c.config, "run configuration file (JSON)");
  if (need_config) opt->required()->check(CLI::ExistingFile);
  app->add_option("-o,--out", c.out, "run directory for all outputs")->required();
  app->add_option("--seed", c.seeds, "seeds, overriding run.seeds");
  app->add_option("--episodes", c.episodes, "episode budget, overriding run.episodes");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Automatic domain randomization experiments"};
  app.require_subcommand(1);

  Common adr_opts, fixed_opts, pert_opts, cur_opts;
  std::string fixed_phi, pert_policy, pert_phi, report_dir;
  std::vector<std::string> pert_kinds;
  bool preset = false;

  auto* run_adr = app.add_subcommand("run-adr", "train with ADR growing the randomization range");
  add_common(run_adr, adr_opts, false);

  auto* run_fixed = app.add_subcommand("run-fixed-dr", "train on a fixed randomization range");
  add_common(run_fixed, fixed_opts, false);
  run_fixed->add_option("--phi", fixed_phi, "phi record (phi_final.json) giving the fixed range")
      ->check(CLI::ExistingFile);

  auto* pert = app.add_subcommand("perturb-exp", "mid-episode perturbation study");
  add_common(pert, pert_opts, false);
  pert->add_option("--policy", pert_policy, "\"scripted\", \"idle\" or a theta snapshot file");
  pert->add_option("--phi", pert_phi, "phi record giving the lambda distribution")
      ->check(CLI::ExistingFile);
  pert->add_option("--kind", pert_kinds, "reset_memory, resample_dynamics or break_joint");

  auto* cur = app.add_subcommand("curriculum", "ADR versus fixed-DR snapshots on equal budgets");
  add_common(cur, cur_opts, false);
  cur->add_flag("--preset", preset, "use the built-in Reacher comparison instead of --config");

  auto* rep = app.add_subcommand("report", "regenerate CSV and SVG files of a run directory");
  rep->add_option("run_dir", report_dir, "run directory holding manifest.json")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_adr->parsed()) return train(adr_opts, true, "");
    if (run_fixed->parsed()) return train(fixed_opts, false, fixed_phi);
    if (pert->parsed()) return perturb(pert_opts, pert_policy, pert_phi, pert_kinds);
    if (cur->parsed()) return curriculum(cur_opts, preset);
    if (rep->parsed()) return report(report_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
