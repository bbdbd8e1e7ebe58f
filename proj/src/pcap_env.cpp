#include "rrm/pcap_env.hpp"

#include <numeric>
#include <string>

namespace rrm {

Assignment::Assignment(std::vector<ApAction> complete) : entries_(complete.begin(), complete.end()) {}

const ApAction &Assignment::at(int ap) const {
  const auto &entry = entries_.at(static_cast<std::size_t>(ap));
  if (!entry)
    throw ContractViolation("AP " + std::to_string(ap) + " is unassigned");
  return *entry;
}

int Assignment::n_assigned() const {
  return static_cast<int>(std::count_if(entries_.begin(), entries_.end(), [](const auto &e) { return e.has_value(); }));
}

std::vector<ApAction> Assignment::actions() const {
  if (!complete())
    throw ContractViolation("assignment is incomplete");
  std::vector<ApAction> out;
  out.reserve(entries_.size());
  for (const auto &e : entries_)
    out.push_back(*e);
  return out;
}

namespace {

void require_complete(const Scenario &s, const Assignment &a) {
  if (a.size() != s.n_aps())
    throw ContractViolation("assignment has " + std::to_string(a.size()) + " entries, scenario has " +
                            std::to_string(s.n_aps()) + " APs");
  if (!a.complete())
    throw ContractViolation("reward is only defined for complete assignments");
}

double tx_dbm(const Scenario &s, int power) { return s.config.power_levels_dbm.at(static_cast<std::size_t>(power)); }

// Association restricted to assigned APs; -1 when no AP transmits.
std::vector<int> partial_association(const Scenario &s, const Assignment &a) {
  std::vector<int> assoc(static_cast<std::size_t>(s.n_stas()), -1);
  for (int k = 0; k < s.n_stas(); ++k) {
    double best = 0.0;
    for (int ap = 0; ap < s.n_aps(); ++ap) {
      if (!a.assigned(ap))
        continue;
      const double v = tx_dbm(s, a.at(ap).power) - s.pathloss_db(ap, s.sta_node(k));
      if (assoc[static_cast<std::size_t>(k)] < 0 || v > best) {
        best = v;
        assoc[static_cast<std::size_t>(k)] = ap;
      }
    }
  }
  return assoc;
}

} // namespace

std::vector<int> associate(const Scenario &s, const Assignment &a) {
  require_complete(s, a);
  return partial_association(s, a);
}

double sinr(const Scenario &s, const Assignment &a, int sta, std::span<const int> association) {
  require_complete(s, a);
  const int node = s.sta_node(sta);
  const int serving = association[static_cast<std::size_t>(sta)];
  const int ch = a.at(serving).channel;
  double interference = 0.0;
  for (int ap = 0; ap < s.n_aps(); ++ap)
    if (ap != serving && a.at(ap).channel == ch)
      interference += received_power_mw(tx_dbm(s, a.at(ap).power), s.pathloss_db(ap, node));
  const double signal = received_power_mw(tx_dbm(s, a.at(serving).power), s.pathloss_db(serving, node));
  return signal / (dbm_to_mw(s.config.noise_floor_dbm) + interference);
}

RewardBreakdown reward(const Scenario &s, const Assignment &a, const RewardParams &params) {
  require_complete(s, a);
  const auto actions = a.actions();
  std::vector<int> scratch;
  return detail::evaluate_reward(
      s, actions, [&](int ap, int p, int node) { return tx_dbm(s, p) - s.pathloss_db(ap, node); },
      [&](int ap, int p, int node) { return received_power_mw(tx_dbm(s, p), s.pathloss_db(ap, node)); }, params,
      scratch);
}

Assignment apply_action(const Scenario &s, const Assignment &a, int ap, int power_index, int channel_index) {
  if (ap < 0 || ap >= s.n_aps())
    throw ContractViolation("AP index " + std::to_string(ap) + " out of range");
  if (power_index < 0 || power_index >= s.config.n_power())
    throw ContractViolation("power index " + std::to_string(power_index) + " out of range");
  if (channel_index < 0 || channel_index >= s.config.n_channels())
    throw ContractViolation("channel index " + std::to_string(channel_index) + " out of range");
  if (a.assigned(ap))
    throw ContractViolation("AP " + std::to_string(ap) + " is already assigned");
  Assignment out = a;
  out.set(ap, {power_index, channel_index});
  return out;
}

int pcap_base_feature_width(const ScenarioConfig &config) { return 3 + config.n_power() + config.n_channels(); }

Eigen::MatrixXd node_features(const Scenario &s, const Assignment &a, const FeatureVariant &v,
                              const Eigen::MatrixXd *de) {
  if (v.kind == FeatureVariant::Kind::Coords)
    throw ContractViolation("PCAP has no coordinate features");
  if (v.is_distance_encoded() != (de != nullptr))
    throw ContractViolation("distance encoding must be supplied iff the variant is DistanceEncoded");
  if (a.size() != s.n_aps())
    throw ContractViolation("assignment size does not match the scenario");

  const int n_power = s.config.n_power();
  const int n_channels = s.config.n_channels();
  const int width = pcap_base_feature_width(s.config);
  const int load_col = 2 + n_power + n_channels;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(s.n_nodes(), width);

  // Unassigned APs are radio-silent for the load and signal columns.
  const auto assoc = partial_association(s, a);
  const double total_demand = s.demands.sum();
  std::vector<double> load(static_cast<std::size_t>(s.n_aps()), 0.0);
  for (int k = 0; k < s.n_stas(); ++k)
    if (assoc[static_cast<std::size_t>(k)] >= 0)
      load[static_cast<std::size_t>(assoc[static_cast<std::size_t>(k)])] += s.demands(k);

  for (int ap = 0; ap < s.n_aps(); ++ap) {
    x(ap, 0) = 1.0;
    if (!a.assigned(ap))
      continue;
    x(ap, 1) = 1.0;
    x(ap, 2 + a.at(ap).power) = 1.0;
    x(ap, 2 + n_power + a.at(ap).channel) = 1.0;
    x(ap, load_col) = load[static_cast<std::size_t>(ap)] / total_demand;
  }
  for (int k = 0; k < s.n_stas(); ++k) {
    const int row = s.sta_node(k);
    x(row, 1) = s.demands(k) / s.config.demand_range.second;
    const int ap = assoc[static_cast<std::size_t>(k)];
    if (ap >= 0) {
      const double rx = tx_dbm(s, a.at(ap).power) - s.pathloss_db(ap, row);
      x(row, 2) = std::max(0.0, (rx - s.config.noise_floor_dbm) / 100.0);
    }
  }
  if (de)
    return append_columns(x, *de);
  return x;
}

Eigen::MatrixXd edge_features(const Scenario &s, const FeatureVariant &v, const PcapFeatureOptions &opts) {
  const int n = s.n_nodes();
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(n, n);
  if (v.edges_visible()) {
    double tau = opts.affinity_scale_db;
    if (tau <= 0.0)
      tau = s.pathloss_db.sum() / (static_cast<double>(n) * (n - 1));
    w = (-s.pathloss_db.array() / tau).exp().matrix();
  }
  w.diagonal().setZero();
  return w;
}

} // namespace rrm
