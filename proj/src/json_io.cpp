#include "rrm/json_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

namespace rrm {

json read_json_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

void write_json_file(const std::filesystem::path &path, const json &value) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << value.dump(2) << '\n';
}

namespace {

template <typename T> T field(const json &j, const char *name) {
  if (!j.contains(name))
    throw ValidationError(name, "missing");
  try {
    return j.at(name).get<T>();
  } catch (const json::exception &e) {
    throw ValidationError(name, e.what());
  }
}

json positions_json(const Eigen::MatrixX2d &p) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    arr.push_back({p(i, 0), p(i, 1)});
  return arr;
}

Eigen::MatrixX2d positions_from(const json &j, const char *name) {
  const auto rows = field<std::vector<std::vector<double>>>(j, name);
  Eigen::MatrixX2d p(static_cast<Eigen::Index>(rows.size()), 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 2)
      throw ValidationError(name, "each position must be [x, y]");
    p(static_cast<Eigen::Index>(i), 0) = rows[i][0];
    p(static_cast<Eigen::Index>(i), 1) = rows[i][1];
  }
  return p;
}

} // namespace

ScenarioConfig scenario_config_from_json(const json &j) {
  if (!j.is_object())
    throw ConfigError("config", "must be a JSON object");
  int n_aps = ScenarioConfig{}.n_aps;
  optional_field(j, "n_aps", n_aps);
  ScenarioConfig c = ScenarioConfig::for_size(n_aps);
  optional_field(j, "n_stas", c.n_stas);
  optional_field(j, "area_side", c.area_side);
  optional_field(j, "power_levels_dbm", c.power_levels_dbm);
  optional_field(j, "channels", c.channels);
  optional_field(j, "pathloss_exponent", c.pathloss_exponent);
  optional_field(j, "pathloss_ref_db", c.pathloss_ref_db);
  optional_field(j, "shadowing_sigma_db", c.shadowing_sigma_db);
  optional_field(j, "noise_floor_dbm", c.noise_floor_dbm);
  if (j.contains("demand_range")) {
    std::vector<double> range;
    optional_field(j, "demand_range", range);
    if (range.size() != 2)
      throw ConfigError("demand_range", "must be [min, max]");
    c.demand_range = {range[0], range[1]};
  }
  optional_field(j, "seed", c.seed);
  return c;
}

json to_json(const ScenarioConfig &c) {
  return json{{"n_aps", c.n_aps},
              {"n_stas", c.n_stas},
              {"area_side", c.area_side},
              {"power_levels_dbm", c.power_levels_dbm},
              {"channels", c.channels},
              {"pathloss_exponent", c.pathloss_exponent},
              {"pathloss_ref_db", c.pathloss_ref_db},
              {"shadowing_sigma_db", c.shadowing_sigma_db},
              {"noise_floor_dbm", c.noise_floor_dbm},
              {"demand_range", {c.demand_range.first, c.demand_range.second}},
              {"seed", c.seed}};
}

json to_json(const Scenario &s) {
  json pl = json::array();
  for (Eigen::Index i = 0; i < s.pathloss_db.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < s.pathloss_db.cols(); ++k)
      row.push_back(s.pathloss_db(i, k));
    pl.push_back(std::move(row));
  }
  return json{{"config", to_json(s.config)},
              {"ap_positions", positions_json(s.ap_positions)},
              {"sta_positions", positions_json(s.sta_positions)},
              {"pathloss_db", std::move(pl)},
              {"demands", std::vector<double>(s.demands.data(), s.demands.data() + s.demands.size())}};
}

Scenario scenario_from_json(const json &j) {
  if (!j.is_object())
    throw ValidationError("<root>", "must be a JSON object");
  if (!j.contains("config"))
    throw ValidationError("config", "missing");
  for (const char *name : {"n_aps", "n_stas", "area_side", "power_levels_dbm", "channels", "pathloss_exponent",
                           "pathloss_ref_db", "shadowing_sigma_db", "noise_floor_dbm", "demand_range", "seed"})
    if (!j.at("config").contains(name))
      throw ValidationError(std::string("config.") + name, "missing");
  Scenario s;
  try {
    s.config = scenario_config_from_json(j.at("config"));
  } catch (const ConfigError &e) {
    throw ValidationError("config." + e.field(), e.what());
  }
  s.ap_positions = positions_from(j, "ap_positions");
  s.sta_positions = positions_from(j, "sta_positions");
  const auto pl = field<std::vector<std::vector<double>>>(j, "pathloss_db");
  const auto n = static_cast<Eigen::Index>(pl.size());
  s.pathloss_db.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(pl[i].size()) != n)
      throw ValidationError("pathloss_db", "must be square");
    for (Eigen::Index k = 0; k < n; ++k)
      s.pathloss_db(i, k) = pl[i][k];
  }
  const auto demands = field<std::vector<double>>(j, "demands");
  s.demands = Eigen::Map<const Eigen::VectorXd>(demands.data(), static_cast<Eigen::Index>(demands.size()));
  try {
    s.validate();
  } catch (const ConfigError &e) {
    throw ValidationError("config." + e.field(), e.what());
  }
  return s;
}

json to_json(const TspInstance &inst) {
  return json{{"n", inst.n()}, {"coords", positions_json(inst.coords)}};
}

TspInstance tsp_from_json(const json &j) {
  if (!j.is_object())
    throw ValidationError("<root>", "must be a JSON object");
  const int n = field<int>(j, "n");
  auto coords = positions_from(j, "coords");
  if (coords.rows() != n)
    throw ValidationError("coords", "expected n rows");
  if (n < 3)
    throw ValidationError("n", "must be >= 3");
  return TspInstance::from_coords(std::move(coords));
}

json to_json(const RewardBreakdown &r) {
  return json{{"coverage", r.coverage},
              {"interference", r.interference},
              {"load_imbalance", r.load_imbalance},
              {"reward", r.reward}};
}

json to_json(const SolveResult &r) {
  json assignment = json::array();
  for (const auto &a : r.assignment.actions())
    assignment.push_back({a.power, a.channel});
  return json{{"assignment", assignment},
              {"reward", to_json(r.reward)},
              {"evaluations", r.evaluations},
              {"wall_time_s", r.wall_time_s}};
}

} // namespace rrm
