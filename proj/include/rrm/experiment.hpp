#ifndef RRM_EXPERIMENT_HPP
#define RRM_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rrm/metrics.hpp"
#include "rrm/policy.hpp"
#include "rrm/training.hpp"

namespace rrm {

struct MethodSpec {
  /// PCAP: exhaustive, local, random, policy, policy_greedy.
  /// TSP: exact, heuristic, random, policy, policy_greedy.
  enum class Kind { Exhaustive, LocalSearch, RandomBest, Policy, PolicyGreedy, TspExact, TspHeuristic };
  Kind kind = Kind::LocalSearch;
  std::string name;
  int k = 100;       ///< random draws, or sampled rollouts for Policy
  std::filesystem::path checkpoint;
  std::optional<TrainConfig> train; ///< trained before evaluation when no checkpoint is given
};

/// Parses "exhaustive", "local", "random:k", "policy:<ckpt>", "policy_greedy:<ckpt>" (and the TSP
/// names) or an object {"kind", "name", "k", "checkpoint", "train"}. Relative checkpoints resolve
/// against `base_dir`.
MethodSpec method_from_json(const nlohmann::json &j, EnvKind env, const std::filesystem::path &base_dir = {});

struct ExperimentSpec {
  EnvKind env = EnvKind::Pcap;
  std::vector<int> sizes{9, 12, 16};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<MethodSpec> methods;
  nlohmann::json scenario_overrides = nlohmann::json::object(); ///< applied on top of for_size(n)
  /// Sizes whose joint action space fits this budget get an exact reference.
  std::uint64_t exact_budget = std::uint64_t{1} << 20;
  int workers = 1;
  std::filesystem::path out_dir;

  void validate() const;
};

ExperimentSpec experiment_spec_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir = {});

struct ResultRow {
  int size = 0;
  std::uint64_t seed = 0;
  std::string instance;
  std::string method;
  double reward = 0.0; ///< PCAP reward, or TSP tour length
  double r_star = 0.0;
  ReferenceKind reference = ReferenceKind::Exact;
  double gap = 0.0; ///< PCAP: (r* - r)/r*. TSP: (L - L*)/L*.
  double wall_time_s = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows; ///< ordered by size, seed, method
  std::vector<std::string> failures;
  std::vector<std::string> failed_methods; ///< methods with no successful run

  bool ok() const { return failures.empty(); }
};

/// Scenario used for (size, seed) in an experiment.
ScenarioConfig experiment_scenario_config(const ExperimentSpec &spec, int size, std::uint64_t seed);

/// Runs every (size, seed, method) combination on a pool of `spec.workers` threads. Results do not
/// depend on the worker count. Writes files when spec.out_dir is non-empty.
ExperimentResult run_experiment(const ExperimentSpec &spec);

/// Fixed column order: size,seed,instance,method,reward,r_star,reference_kind,gap,wall_time_s.
std::string results_csv(const std::vector<ResultRow> &rows);

/// Writes results.csv, one method_<name>.csv per method, reward_diff.csv and summary.json.
void write_experiment_outputs(const ExperimentSpec &spec, const ExperimentResult &result,
                              const std::filesystem::path &dir);

} // namespace rrm

#endif // RRM_EXPERIMENT_HPP
