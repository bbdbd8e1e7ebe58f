#ifndef RRM_SCENARIO_HPP
#define RRM_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rrm/errors.hpp"

namespace rrm {

/// Parameters of a WLAN deployment. Defaults follow `ScenarioConfig::for_size`.
struct ScenarioConfig {
  int n_aps = 9;
  int n_stas = 27;
  double area_side = 150.0;                       ///< meters
  std::vector<double> power_levels_dbm{10.0, 20.0}; ///< strictly increasing
  std::vector<int> channels{1, 2};
  double pathloss_exponent = 3.0;
  double pathloss_ref_db = 40.0; ///< dB at 1 m
  double shadowing_sigma_db = 2.0;
  double noise_floor_dbm = -95.0;
  std::pair<double, double> demand_range{1.0, 10.0}; ///< Mbps
  std::uint64_t seed = 0;

  /// Constant AP density: area_side = 50*sqrt(n_aps), n_stas = 3*n_aps.
  static ScenarioConfig for_size(int n_aps, std::uint64_t seed = 0);

  int n_nodes() const { return n_aps + n_stas; }
  int n_power() const { return static_cast<int>(power_levels_dbm.size()); }
  int n_channels() const { return static_cast<int>(channels.size()); }
  int actions_per_ap() const { return n_power() * n_channels(); }

  /// Throws ConfigError naming the first violated field.
  void validate() const;

  bool operator==(const ScenarioConfig &) const = default;
};

/// Immutable PCAP instance. Nodes are indexed APs first, then STAs.
struct Scenario {
  ScenarioConfig config;
  Eigen::MatrixX2d ap_positions;
  Eigen::MatrixX2d sta_positions;
  Eigen::MatrixXd pathloss_db; ///< symmetric, zero diagonal
  Eigen::VectorXd demands;     ///< per STA, Mbps

  int n_aps() const { return config.n_aps; }
  int n_stas() const { return config.n_stas; }
  int n_nodes() const { return config.n_nodes(); }
  int sta_node(int sta) const { return config.n_aps + sta; }

  /// Throws ValidationError if any structural invariant is broken.
  void validate() const;

  bool operator==(const Scenario &other) const;
};

/// Log-distance pathloss with an additive shadowing draw, clamped below at the reference loss.
template <typename Scalar>
Scalar pathloss(Scalar distance_m, const ScenarioConfig &config, Scalar shadowing_draw_db) {
  using std::log10;
  using std::max;
  if (!(distance_m > Scalar(0)))
    throw DomainError("pathloss: distance must be positive");
  const Scalar ref = static_cast<Scalar>(config.pathloss_ref_db);
  const Scalar loss = ref + Scalar(10) * static_cast<Scalar>(config.pathloss_exponent) * log10(distance_m) +
                      shadowing_draw_db;
  return max(loss, ref);
}

Scenario generate_scenario(const ScenarioConfig &config);

void save_scenario(const Scenario &scenario, const std::filesystem::path &path);
Scenario load_scenario(const std::filesystem::path &path);

} // namespace rrm

#endif // RRM_SCENARIO_HPP
