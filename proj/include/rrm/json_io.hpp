#ifndef RRM_JSON_IO_HPP
#define RRM_JSON_IO_HPP

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rrm/pcap_env.hpp"
#include "rrm/scenario.hpp"
#include "rrm/solvers.hpp"
#include "rrm/tsp_env.hpp"

namespace rrm {

using json = nlohmann::json;

/// Reads and parses a JSON file. Syntax errors become ParseError with the byte offset.
json read_json_file(const std::filesystem::path &path);
void write_json_file(const std::filesystem::path &path, const json &value);

/// Reads `j[name]` into `out` when present. A type mismatch throws ConfigError for `prefix + name`.
template <typename T>
void optional_field(const json &j, const std::string &name, T &out, const std::string &prefix = "") {
  if (!j.contains(name))
    return;
  try {
    out = j.at(name).get<T>();
  } catch (const json::exception &e) {
    throw ConfigError(prefix + name, e.what());
  }
}

/// Missing fields keep their defaults. Defaults for n_stas and area_side are derived from n_aps.
ScenarioConfig scenario_config_from_json(const json &j);
json to_json(const ScenarioConfig &config);

json to_json(const Scenario &scenario);
/// Schema check plus Scenario::validate(). Throws ValidationError naming the field.
Scenario scenario_from_json(const json &j);

/// {"coverage", "interference", "load_imbalance", "reward"}
json to_json(const RewardBreakdown &r);
/// {"assignment": [[p_idx, c_idx], ...], "reward": {...}, "evaluations", "wall_time_s"}
json to_json(const SolveResult &r);

/// {"n": ..., "coords": [[x, y], ...]}; distances are recomputed on load.
json to_json(const TspInstance &inst);
TspInstance tsp_from_json(const json &j);

} // namespace rrm

#endif // RRM_JSON_IO_HPP
