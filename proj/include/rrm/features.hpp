#ifndef RRM_FEATURES_HPP
#define RRM_FEATURES_HPP

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace rrm {

/// Which graph information a learner is allowed to see.
struct FeatureVariant {
  enum class Kind { Coords, Blind, EdgeAware, DistanceEncoded };
  Kind kind = Kind::EdgeAware;
  int k = 1; ///< appended distance-encoding columns, DistanceEncoded only

  static FeatureVariant coords() { return {Kind::Coords, 0}; }
  static FeatureVariant blind() { return {Kind::Blind, 0}; }
  static FeatureVariant edge_aware() { return {Kind::EdgeAware, 0}; }
  static FeatureVariant distance_encoded(int k = 1) { return {Kind::DistanceEncoded, k}; }

  bool is_distance_encoded() const { return kind == Kind::DistanceEncoded; }
  /// Blind hides edge weights; every other variant exposes affinities.
  bool edges_visible() const { return kind == Kind::EdgeAware || kind == Kind::DistanceEncoded; }

  bool operator==(const FeatureVariant &) const = default;
};

std::string to_string(FeatureVariant::Kind kind);
FeatureVariant::Kind feature_kind_from_string(const std::string &name);

/// Learner input for one instance: node features plus a dense edge-affinity matrix.
/// For distance-encoded variants `distance` holds the (normalized) matrix the encoder
/// turns into extra node columns; `node` then holds only the base columns.
struct FeatureSet {
  Eigen::MatrixXd node; ///< n x F
  Eigen::MatrixXd edge; ///< n x n, zero diagonal
  std::optional<Eigen::MatrixXd> distance;

  Eigen::Index n_nodes() const { return node.rows(); }
};

/// Appends `de` (n x k) to `node`. Throws ContractViolation on a row mismatch.
Eigen::MatrixXd append_columns(const Eigen::MatrixXd &node, const Eigen::MatrixXd &de);

} // namespace rrm

#endif // RRM_FEATURES_HPP
