// Command-line front end: scenario generation, solvers, training, experiments, gradient checks.
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rrm/decoder.hpp"
#include "rrm/diagnostics.hpp"
#include "rrm/errors.hpp"
#include "rrm/experiment.hpp"
#include "rrm/json_io.hpp"
#include "rrm/solvers.hpp"
#include "rrm/training.hpp"

namespace fs = std::filesystem;
using rrm::json;

namespace {

int cmd_generate(const fs::path &config_path, const fs::path &out, std::optional<std::uint64_t> seed) {
  const json j = rrm::read_json_file(config_path);
  rrm::ScenarioConfig cfg = rrm::scenario_config_from_json(j);
  if (seed)
    cfg.seed = *seed;
  int count = 1;
  rrm::optional_field(j, "count", count);
  if (count < 1)
    throw rrm::ConfigError("count", "must be >= 1");
  fs::create_directories(out);
  for (int i = 0; i < count; ++i) {
    rrm::ScenarioConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(i);
    const fs::path path = count == 1 ? out / "scenario.json" : out / ("scenario_" + std::to_string(i) + ".json");
    rrm::save_scenario(rrm::generate_scenario(c), path);
    std::cout << path.string() << '\n';
  }
  return 0;
}

int cmd_solve(const fs::path &scenario_path, const std::string &method, std::optional<std::uint64_t> seed,
              int workers, const std::optional<fs::path> &out) {
  const rrm::Scenario s = rrm::load_scenario(scenario_path);
  const std::uint64_t rng_seed = seed.value_or(s.config.seed);
  rrm::SolveResult r;
  if (method == "exhaustive") {
    r = rrm::exhaustive(s, {rrm::kDefaultExhaustiveBudget, workers});
  } else if (method == "local") {
    r = rrm::local_search(s, rrm::default_local_search_init(s));
  } else if (method.rfind("random:", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(method.substr(7));
    } catch (const std::exception &) {
      throw rrm::ConfigError("method", "bad draw count in '" + method + "'");
    }
    r = rrm::random_best(s, k, rng_seed);
  } else {
    throw rrm::ConfigError("method", "expected exhaustive, local or random:k, got '" + method + "'");
  }
  const json j = rrm::to_json(r);
  if (out)
    rrm::write_json_file(*out, j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_train(const fs::path &config_path, const fs::path &out, std::optional<std::uint64_t> seed, bool quiet,
              std::optional<rrm::EnvKind> force_env) {
  json j = rrm::read_json_file(config_path);
  if (force_env)
    j["env"] = rrm::to_string(*force_env);
  if (seed)
    j["seed"] = *seed;
  const rrm::TrainConfig cfg = rrm::train_config_from_json(j);
  rrm::TrainOptions opts;
  opts.out_dir = out;
  if (!quiet)
    opts.on_epoch = [](const rrm::EpochStats &e) {
      std::fprintf(stderr, "epoch %d  train %.6f  val %.6f  loss %.6f  (%.2fs)\n", e.epoch, e.train_reward,
                   e.val_reward, e.loss, e.wall_time_s);
    };
  const auto result = rrm::train(cfg, opts);
  std::cout << "best validation reward " << result.report.best_val_reward << " at epoch " << result.report.best_epoch
            << "; checkpoint " << result.report.checkpoint_path << '\n';
  return 0;
}

int cmd_eval(const fs::path &spec_path, const fs::path &out, std::optional<std::uint64_t> seed,
             std::optional<int> workers, std::optional<rrm::EnvKind> force_env) {
  json j = rrm::read_json_file(spec_path);
  if (force_env)
    j["env"] = rrm::to_string(*force_env);
  rrm::ExperimentSpec spec = rrm::experiment_spec_from_json(j, spec_path.parent_path());
  if (seed)
    for (std::size_t i = 0; i < spec.seeds.size(); ++i)
      spec.seeds[i] = *seed + i;
  if (workers)
    spec.workers = *workers;
  spec.out_dir = out;
  const auto result = rrm::run_experiment(spec);
  for (const auto &f : result.failures)
    std::cerr << "failed: " << f << '\n';
  std::cout << result.rows.size() << " result rows written to " << out.string() << '\n';
  return result.ok() ? 0 : 1;
}

int cmd_gradcheck(int seeds, double tol, const std::string &only) {
  bool ok = true;
  const auto names = only.empty() ? rrm::gradcheck_case_names() : std::vector<std::string>{only};
  for (const auto &name : names) {
    double worst = 0.0;
    long checked = 0;
    long excluded = 0;
    bool passed = true;
    for (int s = 0; s < seeds; ++s) {
      const auto c = rrm::run_gradcheck_case(name, static_cast<std::uint64_t>(s), tol);
      worst = std::max(worst, c.report.max_rel_error);
      checked += c.report.checked;
      excluded += c.report.excluded;
      passed = passed && c.report.passed;
    }
    std::printf("%-24s %s  max_rel_error %.3e  checked %ld  excluded %ld\n", name.c_str(), passed ? "PASS" : "FAIL",
                worst, checked, excluded);
    ok = ok && passed;
  }
  return ok ? 0 : 1;
}

rrm::TspInstance tsp_instance(const std::optional<fs::path> &path, int n, std::optional<std::uint64_t> seed) {
  if (path)
    return rrm::tsp_from_json(rrm::read_json_file(*path));
  return rrm::generate_tsp(n, seed.value_or(0));
}

int cmd_tsp_solve(bool exact, const std::optional<fs::path> &path, int n, std::optional<std::uint64_t> seed) {
  const auto inst = tsp_instance(path, n, seed);
  const auto r = exact ? rrm::exact_tour(inst) : rrm::heuristic_tour(inst);
  std::cout << json{{"tour", r.tour}, {"length", r.length}}.dump(2) << '\n';
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Radio resource management workbench"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  fs::path config;
  fs::path out;
  fs::path scenario;
  fs::path spec;
  std::string method;
  int workers = 1;
  std::optional<int> eval_workers;
  std::optional<fs::path> solve_out;
  bool quiet = false;
  int gc_seeds = 5;
  double gc_tol = 1e-4;
  std::string gc_case;
  std::optional<fs::path> tsp_path;
  int tsp_n = 10;

  auto *gen = app.add_subcommand("generate", "Generate PCAP scenarios from a config");
  gen->add_option("--config", config, "Scenario config JSON")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Override the config seed");

  auto *solve = app.add_subcommand("solve", "Solve one scenario with a classical method");
  solve->add_option("--scenario", scenario, "Scenario JSON")->required();
  solve->add_option("--method", method, "exhaustive | local | random:k")->required();
  solve->add_option("--seed", seed, "Seed for random:k");
  solve->add_option("--workers", workers, "Threads for exhaustive search");
  solve->add_option("--out", solve_out, "Also write the result JSON here");

  auto *tr = app.add_subcommand("train", "Train a policy with REINFORCE");
  tr->add_option("--config", config, "Training config JSON")->required();
  tr->add_option("--out", out, "Output directory (report, curve, checkpoint)")->required();
  tr->add_option("--seed", seed, "Override the config seed");
  tr->add_flag("--quiet", quiet, "No per-epoch progress");

  auto *ev = app.add_subcommand("eval", "Run an experiment spec");
  ev->add_option("--spec", spec, "Experiment spec JSON")->required();
  ev->add_option("--out", out, "Results directory")->required();
  ev->add_option("--seed", seed, "First instance seed (replaces the spec's seed list)");
  ev->add_option("--workers", eval_workers, "Worker threads");

  auto *gc = app.add_subcommand("gradcheck", "Finite-difference checks of every differentiable op");
  gc->add_option("--seeds", gc_seeds, "Random seeds per case");
  gc->add_option("--tol", gc_tol, "Relative tolerance");
  gc->add_option("--case", gc_case, "Run a single case");

  auto *tsp = app.add_subcommand("tsp", "TSP cross-check tools");
  tsp->require_subcommand(1);
  auto *tsp_exact = tsp->add_subcommand("exact", "Held-Karp optimum");
  auto *tsp_heur = tsp->add_subcommand("heuristic", "Nearest neighbour + 2-opt");
  for (auto *sub : {tsp_exact, tsp_heur}) {
    sub->add_option("--instance", tsp_path, "Instance JSON");
    sub->add_option("--n", tsp_n, "Random instance size");
    sub->add_option("--seed", seed, "Random instance seed");
  }
  auto *tsp_train = tsp->add_subcommand("train", "Train a TSP policy");
  tsp_train->add_option("--config", config, "Training config JSON")->required();
  tsp_train->add_option("--out", out, "Output directory")->required();
  tsp_train->add_option("--seed", seed, "Override the config seed");
  tsp_train->add_flag("--quiet", quiet, "No per-epoch progress");
  auto *tsp_eval = tsp->add_subcommand("eval", "Run a TSP experiment spec");
  tsp_eval->add_option("--spec", spec, "Experiment spec JSON")->required();
  tsp_eval->add_option("--out", out, "Results directory")->required();
  tsp_eval->add_option("--seed", seed, "First instance seed");
  tsp_eval->add_option("--workers", eval_workers, "Worker threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen)
      return cmd_generate(config, out, seed);
    if (*solve)
      return cmd_solve(scenario, method, seed, workers, solve_out);
    if (*tr)
      return cmd_train(config, out, seed, quiet, std::nullopt);
    if (*ev)
      return cmd_eval(spec, out, seed, eval_workers, std::nullopt);
    if (*gc)
      return cmd_gradcheck(gc_seeds, gc_tol, gc_case);
    if (*tsp_exact)
      return cmd_tsp_solve(true, tsp_path, tsp_n, seed);
    if (*tsp_heur)
      return cmd_tsp_solve(false, tsp_path, tsp_n, seed);
    if (*tsp_train)
      return cmd_train(config, out, seed, quiet, rrm::EnvKind::Tsp);
    if (*tsp_eval)
      return cmd_eval(spec, out, seed, eval_workers, rrm::EnvKind::Tsp);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
