#ifndef RRM_TRAINING_HPP
#define RRM_TRAINING_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rrm/decoder.hpp"
#include "rrm/policy.hpp"
#include "rrm/scenario.hpp"
#include "rrm/tsp_env.hpp"

namespace rrm {

enum class BaselineKind { ExponentialMovingAverage, GreedyRollout };

struct TrainConfig {
  EnvKind env = EnvKind::Pcap;
  ScenarioConfig scenario; ///< PCAP; its seed is ignored in favour of the derived instance seeds
  int tsp_n = 10;
  PolicyConfig policy;
  int n_epochs = 100;
  int instances_per_epoch = 256;
  int batch_size = 32;
  double lr = 1e-4;
  BaselineKind baseline = BaselineKind::ExponentialMovingAverage;
  double ema_beta = 0.8;
  std::uint64_t seed = 0;
  /// 0 draws fresh instances every epoch. k > 0 trains on a fixed pool of k instances,
  /// which then also serves as the validation set.
  int fixed_instances = 0;
  int validation_size = 32;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Accepts policy fields under "policy" or at the top level. The policy's env and action dims
/// are taken from "env" and "scenario".
TrainConfig train_config_from_json(const nlohmann::json &j);
nlohmann::json to_json(const TrainConfig &cfg);

/// b_1 = m_1, b_t = beta * b_{t-1} + (1 - beta) * m_t over batch mean rewards m_t.
class EmaBaseline {
public:
  explicit EmaBaseline(double beta = 0.8) : beta_(beta) {}
  bool has_value() const { return value_.has_value(); }
  /// The running value, or `fallback` before the first update.
  double value_or(double fallback) const { return value_.value_or(fallback); }
  void update(double batch_mean);
  int updates() const { return updates_; }

private:
  double beta_;
  std::optional<double> value_;
  int updates_ = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_reward = 0.0; ///< mean sampled reward
  double val_reward = 0.0;   ///< mean greedy reward on the validation set
  double loss = 0.0;         ///< mean batch loss
  double baseline = 0.0;     ///< mean baseline value over the epoch
  double wall_time_s = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double initial_val_reward = 0.0;
  double best_val_reward = 0.0;
  int best_epoch = 0;
  std::string checkpoint_path;
};

nlohmann::json to_json(const TrainReport &report);
/// "epoch,train_reward,val_reward,loss" with full round-trip precision.
std::string curve_csv(const TrainReport &report);

/// Baseline state shared across epochs.
struct BaselineState {
  BaselineKind kind = BaselineKind::ExponentialMovingAverage;
  EmaBaseline ema;
  std::optional<Policy> greedy_policy; ///< frozen snapshot, GreedyRollout only
  double greedy_val_reward = 0.0;
};

/// One pass over `instances` in batches. Throws TrainingError on a non-finite loss.
EpochStats reinforce_epoch(Policy &policy, ad::Adam &optimizer, const std::vector<Scenario> &instances,
                           BaselineState &baseline, const TrainConfig &cfg, std::uint64_t sample_seed);
EpochStats reinforce_epoch(Policy &policy, ad::Adam &optimizer, const std::vector<TspInstance> &instances,
                           BaselineState &baseline, const TrainConfig &cfg, std::uint64_t sample_seed);

struct ValidationResult {
  double mean_reward = 0.0;
  /// Mean gap against the supplied references; empty when any reference is missing.
  std::optional<double> mean_gap;
  std::vector<double> rewards;
};

/// Greedy rollouts only. For PCAP the gap is (r* - r)/r*; for TSP it is (L - L*)/L*.
ValidationResult greedy_validate(const Policy &policy, const std::vector<Scenario> &instances,
                                 const std::vector<std::optional<double>> &references = {});
ValidationResult greedy_validate(const Policy &policy, const std::vector<TspInstance> &instances,
                                 const std::vector<std::optional<double>> &references = {});

/// Instance streams derived from the config seed.
std::vector<Scenario> pcap_training_instances(const TrainConfig &cfg, int epoch);
std::vector<Scenario> pcap_validation_instances(const TrainConfig &cfg);
std::vector<TspInstance> tsp_training_instances(const TrainConfig &cfg, int epoch);
std::vector<TspInstance> tsp_validation_instances(const TrainConfig &cfg);

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir; ///< report.json, curve.csv and checkpoint/ when set
  std::function<void(const EpochStats &)> on_epoch;
};

struct TrainResult {
  TrainReport report;
  Policy final_policy;
  Policy best_policy;
};

TrainResult train(const TrainConfig &cfg, const TrainOptions &opts = {});

} // namespace rrm

#endif // RRM_TRAINING_HPP
