#ifndef RRM_DECODER_HPP
#define RRM_DECODER_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "rrm/encoder.hpp"
#include "rrm/pcap_env.hpp"
#include "rrm/policy.hpp"
#include "rrm/scenario.hpp"
#include "rrm/tsp_env.hpp"

namespace rrm {

/// Distribution over a flattened action space of `n_items` blocks of `block` actions each
/// (APs x power x channel for PCAP, nodes for TSP).
struct StepDistribution {
  ad::Tensor log_probs; ///< 1 x n_items*block, exactly 0 on masked entries
  ad::Mask mask;        ///< 1 x n_items*block
  int n_items = 0;
  int block = 1;

  /// exp(log_probs) on unmasked entries, exactly 0 elsewhere.
  Eigen::RowVectorXd probs() const;
  double item_marginal(int item) const;
};

/// Attention decoder step for PCAP. `order` lists chosen APs, most recent last; `chosen[ap]` is the
/// local action (power * n_channels + channel) of an assigned AP and -1 otherwise. Each AP embedding
/// is offset by a learned state row, so the decoder sees earlier actions even without re-embedding.
/// Throws ContractViolation when every AP is assigned or `order` disagrees with `chosen`.
StepDistribution decode_step(const Embeddings &emb, std::span<const int> order, std::span<const int> chosen,
                             const ParamStore &params, const PolicyConfig &cfg, const std::string &prefix = "dec");

/// Encoder-only head: logits of item i are linear(node embedding i). Works for both environments.
StepDistribution encoder_only_step(const Embeddings &emb, const std::vector<bool> &mask, const ParamStore &params,
                                   const PolicyConfig &cfg, const std::string &prefix = "dec");

/// Attention decoder step for TSP with a first/last-node context (placeholder before step one).
StepDistribution tsp_decode_step(const Embeddings &emb, std::optional<int> first, std::optional<int> last,
                                 const std::vector<bool> &unvisited, const ParamStore &params,
                                 const PolicyConfig &cfg, const std::string &prefix = "dec");

struct Sampling {
  enum class Kind { Sample, Greedy, Replay };
  Kind kind = Kind::Greedy;
  std::uint64_t seed = 0;
  std::vector<int> actions; ///< flat actions to force, Replay only

  static Sampling sample(std::uint64_t seed) { return {Kind::Sample, seed, {}}; }
  static Sampling greedy() { return {Kind::Greedy, 0, {}}; }
  static Sampling replay(std::vector<int> flat_actions) { return {Kind::Replay, 0, std::move(flat_actions)}; }
};

struct RolloutOptions {
  bool record_distributions = false;
  bool record_embeddings = false;
};

struct RolloutStep {
  int flat = 0;
  /// PCAP: {ap, power, channel}. TSP: {node, 0, 0}.
  std::array<int, 3> action{};
  double logp = 0.0;
};

struct RolloutTrace {
  std::vector<RolloutStep> steps;
  Assignment assignment; ///< PCAP
  Tour tour;             ///< TSP
  ad::Tensor total_log_prob;
  double reward = 0.0; ///< PCAP reward, or minus the tour length
  RewardBreakdown breakdown;
  double tour_length = 0.0;
  int encoder_calls = 0;
  std::vector<StepDistribution> distributions;
  std::vector<ad::Matrix> embeddings; ///< node embeddings used at each step

  std::vector<int> flat_actions() const;
};

/// Sequential decoding with masking. Throws ContractViolation if the policy does not match the instance.
RolloutTrace rollout(const Scenario &s, const Policy &policy, const Sampling &sampling,
                     const RolloutOptions &opts = {});
RolloutTrace rollout(const TspInstance &inst, const Policy &policy, const Sampling &sampling,
                     const RolloutOptions &opts = {});

/// Best of `n` sampled rollouts (seeds derived from `seed`); ties keep the earliest sample.
RolloutTrace best_of_samples(const Scenario &s, const Policy &policy, int n, std::uint64_t seed);
RolloutTrace best_of_samples(const TspInstance &inst, const Policy &policy, int n, std::uint64_t seed);

/// {"steps": [{"action": [ap, p, c], "logp": ...}, ...], "reward": ...}
nlohmann::json to_json(const RolloutTrace &trace);

/// splitmix64 finalizer, used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

} // namespace rrm

#endif // RRM_DECODER_HPP
