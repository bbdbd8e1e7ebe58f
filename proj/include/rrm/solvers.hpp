#ifndef RRM_SOLVERS_HPP
#define RRM_SOLVERS_HPP

#include <cstdint>
#include <vector>

#include "rrm/pcap_env.hpp"
#include "rrm/scenario.hpp"

namespace rrm {

struct SolveResult {
  Assignment assignment;
  RewardBreakdown reward;
  std::uint64_t evaluations = 0;
  double wall_time_s = 0.0;
  /// Reward after each accepted local-search iteration (starts with the init reward).
  std::vector<double> trace;
  int iterations = 0;
};

/// Reward evaluator with precomputed received-power tables. Results are bit-identical to `reward()`.
class RewardTable {
public:
  explicit RewardTable(const Scenario &s, RewardParams params = {});

  RewardBreakdown evaluate(std::span<const ApAction> actions) const;
  double operator()(std::span<const ApAction> actions) const { return evaluate(actions).reward; }

  const Scenario &scenario() const { return *scenario_; }

private:
  std::size_t index(int ap, int power, int node) const {
    return (static_cast<std::size_t>(power) * static_cast<std::size_t>(n_aps_) + static_cast<std::size_t>(ap)) *
               static_cast<std::size_t>(n_nodes_) +
           static_cast<std::size_t>(node);
  }

  const Scenario *scenario_;
  RewardParams params_;
  int n_aps_;
  int n_nodes_;
  std::vector<double> rx_db_;
  std::vector<double> rx_mw_;
};

inline constexpr std::uint64_t kDefaultExhaustiveBudget = std::uint64_t{1} << 30;

/// Size of the joint action space, saturating at UINT64_MAX.
std::uint64_t action_space_size(const ScenarioConfig &config);

/// Decodes a flat enumeration index; AP 0 is the most significant digit.
std::vector<ApAction> decode_flat_index(std::uint64_t index, const ScenarioConfig &config);

struct ExhaustiveOptions {
  std::uint64_t budget = kDefaultExhaustiveBudget;
  int workers = 1;
};

/// Global maximum by complete enumeration; ties go to the lexicographically smallest
/// per-AP action vector. Throws SizeLimitError when the space exceeds the budget.
SolveResult exhaustive(const Scenario &s, const ExhaustiveOptions &opts = {});

/// Round-robin channels by AP index, all powers at the minimum level.
Assignment default_local_search_init(const Scenario &s);

/// Power-only local search with channels fixed to those of `init`. Each round compares the best
/// single-AP power change with moving every AP to its best alternative level at once, and takes
/// the better one while it strictly improves.
SolveResult local_search(const Scenario &s, const Assignment &init);

/// Best of `restarts` local searches: the first from the default init, the rest from
/// random channel/power draws.
SolveResult local_search_restarts(const Scenario &s, int restarts, std::uint64_t seed);

/// Best of k uniform complete assignments.
SolveResult random_best(const Scenario &s, int k, std::uint64_t seed);

} // namespace rrm

#endif // RRM_SOLVERS_HPP
