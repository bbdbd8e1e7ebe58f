#ifndef RRM_ENCODER_HPP
#define RRM_ENCODER_HPP

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rrm/features.hpp"
#include "rrm/params.hpp"
#include "rrm/scenario.hpp"
#include "rrm/tensor.hpp"
#include "rrm/tsp_env.hpp"

namespace rrm {

struct EncoderConfig {
  enum class Kind { GatedGCN, GAT };
  Kind kind = Kind::GatedGCN;
  int hidden_dim = 64;
  int n_layers = 3;
  int n_heads = 4;
  bool use_layer_norm = true;
  FeatureVariant variant;

  void validate() const;
};

struct DistanceEncodingConfig {
  enum class DistanceKind { PathlossWeightedShortestPath, HopCount };
  DistanceKind distance_kind = DistanceKind::PathlossWeightedShortestPath;
  int k = 1;
  int transform_hidden = 16;

  void validate() const;
};

struct Embeddings {
  ad::Tensor node;  ///< n x hidden_dim
  ad::Tensor graph; ///< 1 x hidden_dim, column mean of `node`
};

/// Directed edge list over all ordered pairs i != j, grouped by receiving node `src`.
struct GraphEdges {
  Eigen::Index n_nodes = 0;
  std::vector<Eigen::Index> src;
  std::vector<Eigen::Index> dst;

  static GraphEdges complete(Eigen::Index n);
  Eigen::Index size() const { return static_cast<Eigen::Index>(src.size()); }
};

void init_encoder_params(ParamStore &params, const EncoderConfig &cfg, int input_dim, std::mt19937_64 &rng,
                         const std::string &prefix = "enc");
void init_distance_encoding_params(ParamStore &params, const DistanceEncodingConfig &cfg, std::mt19937_64 &rng,
                                   const std::string &prefix = "de");

/// Input projection, `n_layers` message-passing layers, then node and graph embeddings.
/// Distance-encoded variants append distance_encode(features.distance) to the node features first.
Embeddings encode(const FeatureSet &features, const EncoderConfig &cfg, const ParamStore &params,
                  const DistanceEncodingConfig *de_cfg = nullptr, const std::string &prefix = "enc",
                  const std::string &de_prefix = "de");

struct GatedGcnState {
  ad::Tensor h; ///< n x d
  ad::Tensor e; ///< |edges| x d
};

/// One residual gated graph-convolution layer:
///   e'_ij = e_ij + relu(norm(A h_i + B h_j + C e_ij))
///   eta_ij = sigmoid(e'_ij) / (sum_j sigmoid(e'_ij) + 1e-9)
///   h'_i  = h_i + relu(norm(U h_i + sum_j eta_ij * V h_j))
GatedGcnState gated_gcn_layer(const GatedGcnState &in, const GraphEdges &edges, const ParamStore &params,
                              const std::string &prefix, bool use_layer_norm);

/// Per-head attention weights (n x n) of a GAT layer: softmax over neighbours j != i of
/// q_i.k_j / sqrt(d_head) + log(w_ij + 1e-9).
ad::Tensor gat_attention(const ad::Tensor &h, const Eigen::MatrixXd &affinity, const ParamStore &params,
                         const std::string &prefix, int head);

/// Multi-head attention sublayer and a feed-forward sublayer, each residual + norm.
ad::Tensor gat_layer(const ad::Tensor &h, const Eigen::MatrixXd &affinity, const ParamStore &params,
                     const std::string &prefix, int n_heads, bool use_layer_norm);

/// Learnable edge-to-node transform: each off-diagonal entry passes through
/// dense(1 -> hidden) + relu + dense(hidden -> k); row i averages over j != i.
/// Throws ContractViolation unless `distance` is symmetric, non-negative, zero on the diagonal.
ad::Tensor distance_encode(const Eigen::MatrixXd &distance, const DistanceEncodingConfig &cfg,
                           const ParamStore &params, const std::string &prefix = "de");

/// All-pairs shortest paths with pathloss costs, or hop counts on the graph of pairs whose
/// pathloss is at most the median. Unreachable hop pairs get diameter + 1.
Eigen::MatrixXd build_distance_matrix(const Scenario &s, DistanceEncodingConfig::DistanceKind kind);
/// Same with Euclidean edge costs (threshold: median distance).
Eigen::MatrixXd build_distance_matrix(const TspInstance &inst, DistanceEncodingConfig::DistanceKind kind);

/// Distance matrix divided by its mean off-diagonal entry, the scale the learnable transform sees.
Eigen::MatrixXd normalize_distance(const Eigen::MatrixXd &distance);

std::string to_string(EncoderConfig::Kind kind);
std::string to_string(DistanceEncodingConfig::DistanceKind kind);

} // namespace rrm

#endif // RRM_ENCODER_HPP
