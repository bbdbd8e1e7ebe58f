#ifndef RRM_PARAMS_HPP
#define RRM_PARAMS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "rrm/tensor.hpp"

namespace rrm {

/// Named trainable tensors, iterated in name order.
class ParamStore {
public:
  ad::Tensor &add(const std::string &name, ad::Matrix init);
  const ad::Tensor &get(const std::string &name) const;
  bool contains(const std::string &name) const { return params_.count(name) > 0; }
  std::size_t size() const { return params_.size(); }

  std::vector<ad::Tensor> tensors() const;
  const std::map<std::string, ad::Tensor> &items() const { return params_; }

  /// Constant copies of every value, for gradient-free evaluation.
  ParamStore snapshot() const;
  /// Independent trainable copy.
  ParamStore clone() const;
  /// Overwrites values from a store with identical names and shapes.
  void copy_values_from(const ParamStore &other);
  Eigen::Index parameter_count() const;

private:
  std::map<std::string, ad::Tensor> params_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
ad::Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64 &rng);

struct Checkpoint {
  ParamStore params;
  nlohmann::json metadata;
  std::int64_t optimizer_step = 0;
};

/// Writes manifest.json (names, shapes, optimizer step, metadata) and one raw little-endian
/// float64 blob per tensor into `dir`.
void save_checkpoint(const std::filesystem::path &dir, const ParamStore &params, const nlohmann::json &metadata,
                     std::int64_t optimizer_step);
Checkpoint load_checkpoint(const std::filesystem::path &dir);

} // namespace rrm

#endif // RRM_PARAMS_HPP
