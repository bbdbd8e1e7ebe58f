#ifndef RRM_PCAP_ENV_HPP
#define RRM_PCAP_ENV_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rrm/features.hpp"
#include "rrm/scenario.hpp"

namespace rrm {

struct ApAction {
  int power = 0;   ///< index into power_levels_dbm
  int channel = 0; ///< index into channels
  bool operator==(const ApAction &) const = default;
};

/// Per-AP decision vector; entries are empty while the AP is unassigned.
class Assignment {
public:
  Assignment() = default;
  explicit Assignment(int n_aps) : entries_(static_cast<std::size_t>(n_aps)) {}
  explicit Assignment(std::vector<ApAction> complete);

  int size() const { return static_cast<int>(entries_.size()); }
  bool assigned(int ap) const { return entries_.at(static_cast<std::size_t>(ap)).has_value(); }
  const ApAction &at(int ap) const;
  int n_assigned() const;
  bool complete() const { return n_assigned() == size(); }
  /// Throws ContractViolation unless complete.
  std::vector<ApAction> actions() const;

  void set(int ap, ApAction action) { entries_.at(static_cast<std::size_t>(ap)) = action; }

  bool operator==(const Assignment &) const = default;

private:
  std::vector<std::optional<ApAction>> entries_;
};

struct RewardBreakdown {
  double coverage = 0.0;
  double interference = 0.0;
  double load_imbalance = 0.0;
  double reward = 0.0;
  bool operator==(const RewardBreakdown &) const = default;
};

struct RewardParams {
  double sinr_target_db = 20.0;
  double interference_ref_mw = 1e-6;
  double epsilon = 1e-6;
  double coverage_floor = 1e-3;
};

template <typename Scalar> Scalar received_power_mw(Scalar tx_dbm, Scalar pl_db) {
  using std::pow;
  return pow(Scalar(10), (tx_dbm - pl_db) / Scalar(10));
}

template <typename Scalar> Scalar dbm_to_mw(Scalar dbm) {
  using std::pow;
  return pow(Scalar(10), dbm / Scalar(10));
}

/// Strongest received signal (tx_dbm - pathloss) per STA; ties go to the lowest AP index.
std::vector<int> associate(const Scenario &s, const Assignment &a);

/// S / (N + I) at `sta`, with co-channel interference only.
double sinr(const Scenario &s, const Assignment &a, int sta, std::span<const int> association);

/// Throws ContractViolation for an incomplete assignment.
RewardBreakdown reward(const Scenario &s, const Assignment &a, const RewardParams &params = {});

/// Copy of `a` with `ap` set. Throws ContractViolation if `ap` is already assigned.
Assignment apply_action(const Scenario &s, const Assignment &a, int ap, int power_index, int channel_index);

/// Edge-affinity scale; 0 selects the mean off-diagonal pathloss of the scenario.
struct PcapFeatureOptions {
  double affinity_scale_db = 0.0;
};

/// Width of the base (non distance-encoded) PCAP node features.
int pcap_base_feature_width(const ScenarioConfig &config);

/// Rows are APs then STAs; see README for the column layout. `de` must be given iff the
/// variant is DistanceEncoded and then has shape n_nodes x k.
Eigen::MatrixXd node_features(const Scenario &s, const Assignment &a, const FeatureVariant &v,
                              const Eigen::MatrixXd *de = nullptr);

Eigen::MatrixXd edge_features(const Scenario &s, const FeatureVariant &v, const PcapFeatureOptions &opts = {});

namespace detail {

/// Shared reward kernel. `rx_db(ap, power, node)` returns tx_dbm - pathloss and `rx_mw` the linear
/// received power; callers may serve both from precomputed tables without changing the result.
template <typename RxDb, typename RxMw>
RewardBreakdown evaluate_reward(const Scenario &s, std::span<const ApAction> actions, RxDb &&rx_db, RxMw &&rx_mw,
                                const RewardParams &params, std::vector<int> &assoc_scratch) {
  const int n_aps = s.n_aps();
  const int n_stas = s.n_stas();
  assoc_scratch.resize(static_cast<std::size_t>(n_stas));

  const double noise_mw = dbm_to_mw(s.config.noise_floor_dbm);
  double coverage_sum = 0.0;
  for (int k = 0; k < n_stas; ++k) {
    const int node = s.sta_node(k);
    int best = 0;
    double best_db = rx_db(0, actions[0].power, node);
    for (int ap = 1; ap < n_aps; ++ap) {
      const double v = rx_db(ap, actions[static_cast<std::size_t>(ap)].power, node);
      if (v > best_db) {
        best_db = v;
        best = ap;
      }
    }
    assoc_scratch[static_cast<std::size_t>(k)] = best;
    const int ch = actions[static_cast<std::size_t>(best)].channel;
    double interference = 0.0;
    for (int ap = 0; ap < n_aps; ++ap)
      if (ap != best && actions[static_cast<std::size_t>(ap)].channel == ch)
        interference += rx_mw(ap, actions[static_cast<std::size_t>(ap)].power, node);
    const double signal = rx_mw(best, actions[static_cast<std::size_t>(best)].power, node);
    const double sinr_db = 10.0 * std::log10(signal / (noise_mw + interference));
    coverage_sum += std::clamp(sinr_db / params.sinr_target_db, 0.0, 1.0);
  }

  double interference_sum = 0.0;
  for (int ap = 0; ap < n_aps; ++ap) {
    const int ch = actions[static_cast<std::size_t>(ap)].channel;
    double received = 0.0;
    for (int other = 0; other < n_aps; ++other)
      if (other != ap && actions[static_cast<std::size_t>(other)].channel == ch)
        received += rx_mw(other, actions[static_cast<std::size_t>(other)].power, ap);
    interference_sum += std::log10(1.0 + received / params.interference_ref_mw);
  }

  // Loads are accumulated in STA order so every caller sums identically.
  std::vector<double> load(static_cast<std::size_t>(n_aps), 0.0);
  for (int k = 0; k < n_stas; ++k)
    load[static_cast<std::size_t>(assoc_scratch[static_cast<std::size_t>(k)])] += s.demands(k);
  double mean = 0.0;
  for (double l : load)
    mean += l;
  mean /= n_aps;
  double var = 0.0;
  for (double l : load)
    var += (l - mean) * (l - mean);
  var /= n_aps;

  RewardBreakdown out;
  out.coverage = coverage_sum / n_stas;
  out.interference = interference_sum / n_aps;
  out.load_imbalance = std::sqrt(var) / (mean + params.epsilon);
  out.reward = std::max(out.coverage, params.coverage_floor) /
               ((1.0 + out.interference) * (1.0 + out.load_imbalance));
  return out;
}

} // namespace detail

} // namespace rrm

#endif // RRM_PCAP_ENV_HPP
