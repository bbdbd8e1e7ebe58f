#include "rrm/features.hpp"

#include "rrm/errors.hpp"

namespace rrm {

std::string to_string(FeatureVariant::Kind kind) {
  switch (kind) {
  case FeatureVariant::Kind::Coords:
    return "coords";
  case FeatureVariant::Kind::Blind:
    return "blind";
  case FeatureVariant::Kind::EdgeAware:
    return "edge_aware";
  case FeatureVariant::Kind::DistanceEncoded:
    return "distance_encoded";
  }
  return "?";
}

FeatureVariant::Kind feature_kind_from_string(const std::string &name) {
  if (name == "coords")
    return FeatureVariant::Kind::Coords;
  if (name == "blind")
    return FeatureVariant::Kind::Blind;
  if (name == "edge_aware")
    return FeatureVariant::Kind::EdgeAware;
  if (name == "distance_encoded")
    return FeatureVariant::Kind::DistanceEncoded;
  throw ConfigError("variant", "unknown feature variant '" + name + "'");
}

Eigen::MatrixXd append_columns(const Eigen::MatrixXd &node, const Eigen::MatrixXd &de) {
  if (de.rows() != node.rows())
    throw ContractViolation("distance encoding has " + std::to_string(de.rows()) + " rows, expected " +
                            std::to_string(node.rows()));
  Eigen::MatrixXd out(node.rows(), node.cols() + de.cols());
  out << node, de;
  return out;
}

} // namespace rrm
