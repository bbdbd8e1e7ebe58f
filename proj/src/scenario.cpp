#include "rrm/scenario.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "rrm/json_io.hpp"

namespace rrm {

ScenarioConfig ScenarioConfig::for_size(int n_aps, std::uint64_t seed) {
  ScenarioConfig config;
  config.n_aps = n_aps;
  config.n_stas = 3 * n_aps;
  config.area_side = 50.0 * std::sqrt(static_cast<double>(n_aps));
  config.seed = seed;
  return config;
}

void ScenarioConfig::validate() const {
  if (n_aps < 2)
    throw ConfigError("n_aps", "must be >= 2");
  if (n_stas < 1)
    throw ConfigError("n_stas", "must be >= 1");
  if (!(area_side > 0.0))
    throw ConfigError("area_side", "must be > 0");
  if (power_levels_dbm.size() < 2)
    throw ConfigError("power_levels_dbm", "needs at least 2 levels");
  for (std::size_t i = 1; i < power_levels_dbm.size(); ++i)
    if (!(power_levels_dbm[i] > power_levels_dbm[i - 1]))
      throw ConfigError("power_levels_dbm", "must be strictly increasing");
  if (channels.size() < 2)
    throw ConfigError("channels", "needs at least 2 channels");
  {
    auto sorted = channels;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("channels", "must be distinct");
  }
  if (!(pathloss_exponent >= 2.0))
    throw ConfigError("pathloss_exponent", "must be >= 2.0");
  if (!(pathloss_ref_db > 0.0))
    throw ConfigError("pathloss_ref_db", "must be > 0 so that every pathloss is positive");
  if (!(shadowing_sigma_db >= 0.0))
    throw ConfigError("shadowing_sigma_db", "must be >= 0");
  if (!std::isfinite(noise_floor_dbm))
    throw ConfigError("noise_floor_dbm", "must be finite");
  if (!(demand_range.first > 0.0) || !(demand_range.second >= demand_range.first))
    throw ConfigError("demand_range", "needs 0 < min <= max");
}

void Scenario::validate() const {
  config.validate();
  const int n = n_nodes();
  if (ap_positions.rows() != config.n_aps)
    throw ValidationError("ap_positions", "expected " + std::to_string(config.n_aps) + " rows");
  if (sta_positions.rows() != config.n_stas)
    throw ValidationError("sta_positions", "expected " + std::to_string(config.n_stas) + " rows");
  auto inside = [&](const Eigen::MatrixX2d &p) {
    return (p.array() >= 0.0).all() && (p.array() <= config.area_side).all();
  };
  if (!inside(ap_positions))
    throw ValidationError("ap_positions", "outside [0, area_side]^2");
  if (!inside(sta_positions))
    throw ValidationError("sta_positions", "outside [0, area_side]^2");
  if (pathloss_db.rows() != n || pathloss_db.cols() != n)
    throw ValidationError("pathloss_db", "expected a " + std::to_string(n) + "x" + std::to_string(n) + " matrix");
  for (int i = 0; i < n; ++i) {
    if (pathloss_db(i, i) != 0.0)
      throw ValidationError("pathloss_db", "diagonal must be zero");
    for (int j = i + 1; j < n; ++j) {
      if (pathloss_db(i, j) != pathloss_db(j, i))
        throw ValidationError("pathloss_db", "not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (!(pathloss_db(i, j) > 0.0))
        throw ValidationError("pathloss_db", "off-diagonal entries must be positive");
    }
  }
  if (demands.size() != config.n_stas)
    throw ValidationError("demands", "expected one entry per STA");
  if (!(demands.array() > 0.0).all())
    throw ValidationError("demands", "must be positive");
}

bool Scenario::operator==(const Scenario &other) const {
  return config == other.config && ap_positions == other.ap_positions && sta_positions == other.sta_positions &&
         pathloss_db == other.pathloss_db && demands == other.demands;
}

Scenario generate_scenario(const ScenarioConfig &config) {
  config.validate();
  constexpr double kMinSeparation = 1.0;
  constexpr int kMaxAttempts = 10000;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> coord(0.0, config.area_side);

  const int n = config.n_nodes();
  Eigen::MatrixX2d positions(n, 2);
  for (int i = 0; i < n; ++i) {
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kMaxAttempts)
        throw ConfigError("area_side", "too small to place nodes 1 m apart");
      const double x = coord(rng);
      const double y = coord(rng);
      const Eigen::RowVector2d p(x, y);
      bool clear = true;
      for (int j = 0; j < i && clear; ++j)
        clear = (positions.row(j) - p).norm() >= kMinSeparation;
      if (clear) {
        positions.row(i) = p;
        break;
      }
    }
  }

  Scenario s;
  s.config = config;
  s.ap_positions = positions.topRows(config.n_aps);
  s.sta_positions = positions.bottomRows(config.n_stas);

  std::normal_distribution<double> shadow(0.0, 1.0);
  s.pathloss_db = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double draw = config.shadowing_sigma_db > 0.0 ? config.shadowing_sigma_db * shadow(rng) : 0.0;
      const double d = (positions.row(i) - positions.row(j)).norm();
      s.pathloss_db(i, j) = s.pathloss_db(j, i) = pathloss(d, config, draw);
    }

  std::uniform_real_distribution<double> demand(config.demand_range.first, config.demand_range.second);
  s.demands.resize(config.n_stas);
  for (int k = 0; k < config.n_stas; ++k)
    s.demands(k) = demand(rng);
  return s;
}

void save_scenario(const Scenario &scenario, const std::filesystem::path &path) {
  write_json_file(path, to_json(scenario));
}

Scenario load_scenario(const std::filesystem::path &path) { return scenario_from_json(read_json_file(path)); }

} // namespace rrm
