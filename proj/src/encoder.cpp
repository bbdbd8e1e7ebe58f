#include "rrm/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "rrm/errors.hpp"

namespace rrm {

using ad::Matrix;
using ad::Tensor;

void EncoderConfig::validate() const {
  if (hidden_dim < 1)
    throw ConfigError("encoder.hidden_dim", "must be >= 1");
  if (n_layers < 0)
    throw ConfigError("encoder.n_layers", "must be >= 0");
  if (kind == Kind::GAT) {
    if (n_heads < 1)
      throw ConfigError("encoder.n_heads", "must be >= 1");
    if (hidden_dim % n_heads != 0)
      throw ConfigError("encoder.n_heads", "hidden_dim must be divisible by n_heads");
  }
  if (variant.is_distance_encoded() && variant.k < 1)
    throw ConfigError("variant.k", "must be >= 1");
}

void DistanceEncodingConfig::validate() const {
  if (k < 1)
    throw ConfigError("distance_encoding.k", "must be >= 1");
  if (transform_hidden < 1)
    throw ConfigError("distance_encoding.transform_hidden", "must be >= 1");
}

GraphEdges GraphEdges::complete(Eigen::Index n) {
  GraphEdges g;
  g.n_nodes = n;
  g.src.reserve(static_cast<std::size_t>(n * std::max<Eigen::Index>(n - 1, 0)));
  g.dst.reserve(g.src.capacity());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        g.src.push_back(i);
        g.dst.push_back(j);
      }
  return g;
}

namespace {

Matrix zeros(Eigen::Index r, Eigen::Index c) { return Matrix::Zero(r, c); }
Matrix ones(Eigen::Index r, Eigen::Index c) { return Matrix::Ones(r, c); }

Tensor linear(const Tensor &x, const ParamStore &p, const std::string &name) {
  return ad::add(ad::matmul(x, p.get(name + ".W")), p.get(name + ".b"));
}

void add_linear(ParamStore &p, const std::string &name, int in, int out, std::mt19937_64 &rng) {
  p.add(name + ".W", xavier_uniform(in, out, rng));
  p.add(name + ".b", zeros(1, out));
}

void add_norm(ParamStore &p, const std::string &name, int d) {
  p.add(name + ".gain", ones(1, d));
  p.add(name + ".bias", zeros(1, d));
}

Tensor norm(const Tensor &x, const ParamStore &p, const std::string &name, bool enabled) {
  if (!enabled)
    return x;
  return ad::layer_norm(x, p.get(name + ".gain"), p.get(name + ".bias"));
}

} // namespace

void init_encoder_params(ParamStore &params, const EncoderConfig &cfg, int input_dim, std::mt19937_64 &rng,
                         const std::string &prefix) {
  cfg.validate();
  const int d = cfg.hidden_dim;
  add_linear(params, prefix + ".in_node", input_dim, d, rng);
  if (cfg.kind == EncoderConfig::Kind::GatedGCN)
    add_linear(params, prefix + ".in_edge", 1, d, rng);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string layer = prefix + ".layer" + std::to_string(l);
    if (cfg.kind == EncoderConfig::Kind::GatedGCN) {
      for (const char *m : {"A", "B", "C", "U", "V"})
        params.add(layer + "." + m, xavier_uniform(d, d, rng));
      params.add(layer + ".bias_e", zeros(1, d));
      params.add(layer + ".bias_h", zeros(1, d));
      if (cfg.use_layer_norm) {
        add_norm(params, layer + ".norm_e", d);
        add_norm(params, layer + ".norm_h", d);
      }
    } else {
      const int dh = d / cfg.n_heads;
      for (int h = 0; h < cfg.n_heads; ++h)
        for (const char *m : {"Wq", "Wk", "Wv"})
          params.add(layer + ".head" + std::to_string(h) + "." + m, xavier_uniform(d, dh, rng));
      params.add(layer + ".Wo", xavier_uniform(d, d, rng));
      add_linear(params, layer + ".ff1", d, 2 * d, rng);
      add_linear(params, layer + ".ff2", 2 * d, d, rng);
      if (cfg.use_layer_norm) {
        add_norm(params, layer + ".norm_att", d);
        add_norm(params, layer + ".norm_ff", d);
      }
    }
  }
}

void init_distance_encoding_params(ParamStore &params, const DistanceEncodingConfig &cfg, std::mt19937_64 &rng,
                                   const std::string &prefix) {
  cfg.validate();
  add_linear(params, prefix + ".transform1", 1, cfg.transform_hidden, rng);
  add_linear(params, prefix + ".transform2", cfg.transform_hidden, cfg.k, rng);
}

GatedGcnState gated_gcn_layer(const GatedGcnState &in, const GraphEdges &edges, const ParamStore &params,
                              const std::string &prefix, bool use_layer_norm) {
  const Tensor &h = in.h;
  const Tensor &e = in.e;
  if (h.rows() != edges.n_nodes)
    throw ContractViolation("gated_gcn_layer: node states " + ad::shape_string(h) + " do not match " +
                            std::to_string(edges.n_nodes) + " nodes");
  if (e.rows() != edges.size() || e.cols() != h.cols())
    throw ContractViolation("gated_gcn_layer: edge states " + ad::shape_string(e) + " do not match the edge list");
  const Eigen::Index n = edges.n_nodes;

  const Tensor ah = ad::matmul(h, params.get(prefix + ".A"));
  const Tensor bh = ad::matmul(h, params.get(prefix + ".B"));
  Tensor e_hat = ad::add(ad::index_select(ah, edges.src), ad::index_select(bh, edges.dst));
  e_hat = ad::add(ad::add(e_hat, ad::matmul(e, params.get(prefix + ".C"))), params.get(prefix + ".bias_e"));
  const Tensor e_new = ad::add(e, ad::relu(norm(e_hat, params, prefix + ".norm_e", use_layer_norm)));

  const Tensor gate = ad::sigmoid(e_new);
  const Tensor gate_sum = ad::add_scalar(ad::index_add(gate, edges.src, n), 1e-9);
  const Tensor eta = ad::div(gate, ad::index_select(gate_sum, edges.src));
  const Tensor vh = ad::matmul(h, params.get(prefix + ".V"));
  const Tensor aggregated = ad::index_add(ad::mul(eta, ad::index_select(vh, edges.dst)), edges.src, n);

  Tensor h_hat = ad::add(ad::add(ad::matmul(h, params.get(prefix + ".U")), aggregated), params.get(prefix + ".bias_h"));
  const Tensor h_new = ad::add(h, ad::relu(norm(h_hat, params, prefix + ".norm_h", use_layer_norm)));
  return {h_new, e_new};
}

Tensor gat_attention(const Tensor &h, const Eigen::MatrixXd &affinity, const ParamStore &params,
                     const std::string &prefix, int head) {
  const Eigen::Index n = h.rows();
  if (affinity.rows() != n || affinity.cols() != n)
    throw ContractViolation("gat_attention: affinity matrix does not match " + ad::shape_string(h));
  const std::string hp = prefix + ".head" + std::to_string(head);
  const Tensor q = ad::matmul(h, params.get(hp + ".Wq"));
  const Tensor k = ad::matmul(h, params.get(hp + ".Wk"));
  const Tensor kt = ad::transpose(k);
  Matrix bias = (affinity.array() + 1e-9).log().matrix();
  ad::Mask mask = ad::Mask::Constant(n, n, true);
  for (Eigen::Index i = 0; i < n; ++i) {
    mask(i, i) = false;
    bias(i, i) = 0.0;
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const Tensor scores = ad::add(ad::scale(ad::matmul(q, kt), inv_sqrt), Tensor::constant(bias));
  return ad::masked_row_softmax(scores, mask);
}

Tensor gat_layer(const Tensor &h, const Eigen::MatrixXd &affinity, const ParamStore &params,
                 const std::string &prefix, int n_heads, bool use_layer_norm) {
  std::vector<Tensor> heads;
  heads.reserve(static_cast<std::size_t>(n_heads));
  for (int head = 0; head < n_heads; ++head) {
    const Tensor att = gat_attention(h, affinity, params, prefix, head);
    heads.push_back(ad::matmul(att, ad::matmul(h, params.get(prefix + ".head" + std::to_string(head) + ".Wv"))));
  }
  const Tensor mixed = ad::matmul(ad::concat(heads, 1), params.get(prefix + ".Wo"));
  const Tensor h1 = norm(ad::add(h, mixed), params, prefix + ".norm_att", use_layer_norm);
  const Tensor ff = linear(ad::relu(linear(h1, params, prefix + ".ff1")), params, prefix + ".ff2");
  return norm(ad::add(h1, ff), params, prefix + ".norm_ff", use_layer_norm);
}

Tensor distance_encode(const Eigen::MatrixXd &distance, const DistanceEncodingConfig &cfg, const ParamStore &params,
                       const std::string &prefix) {
  const Eigen::Index n = distance.rows();
  if (distance.cols() != n)
    throw ContractViolation("distance_encode: distance matrix must be square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (distance(i, i) != 0.0)
      throw ContractViolation("distance_encode: diagonal must be zero");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (distance(i, j) != distance(j, i))
        throw ContractViolation("distance_encode: distance matrix must be symmetric");
      if (distance(i, j) < 0.0)
        throw ContractViolation("distance_encode: distances must be non-negative");
    }
  }
  if (n < 2)
    return Tensor::constant(Matrix::Zero(n, cfg.k));

  // The transform runs once per distinct value and each row sums its terms in value order, so
  // relabelling the nodes permutes the output exactly.
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * (n - 1)));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j)
        values.push_back(distance(i, j));
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<Eigen::Index> src;
  std::vector<Eigen::Index> value_index;
  std::vector<double> row;
  for (Eigen::Index i = 0; i < n; ++i) {
    row.clear();
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j)
        row.push_back(distance(i, j));
    std::sort(row.begin(), row.end());
    for (double v : row) {
      src.push_back(i);
      value_index.push_back(std::lower_bound(values.begin(), values.end(), v) - values.begin());
    }
  }

  const Matrix entries = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(values.size()), 1);
  const Tensor hidden = ad::relu(linear(Tensor::constant(entries), params, prefix + ".transform1"));
  const Tensor mapped = linear(hidden, params, prefix + ".transform2");
  return ad::scale(ad::index_add(ad::index_select(mapped, value_index), src, n), 1.0 / static_cast<double>(n - 1));
}

Embeddings encode(const FeatureSet &features, const EncoderConfig &cfg, const ParamStore &params,
                  const DistanceEncodingConfig *de_cfg, const std::string &prefix, const std::string &de_prefix) {
  const Eigen::Index n = features.n_nodes();
  if (features.edge.rows() != n || features.edge.cols() != n)
    throw ContractViolation("encode: edge features do not match the node count");

  Tensor x = Tensor::constant(features.node);
  if (cfg.variant.is_distance_encoded()) {
    if (!features.distance || !de_cfg)
      throw ContractViolation("encode: distance-encoded variant needs a distance matrix and config");
    x = ad::concat({x, distance_encode(*features.distance, *de_cfg, params, de_prefix)}, 1);
  }
  const auto &w_in = params.get(prefix + ".in_node.W");
  if (x.cols() != w_in.rows())
    throw ContractViolation("encode: feature width " + std::to_string(x.cols()) +
                            " does not match the input projection " + ad::shape_string(w_in));

  Tensor h = linear(x, params, prefix + ".in_node");
  if (cfg.kind == EncoderConfig::Kind::GatedGCN) {
    const GraphEdges edges = GraphEdges::complete(n);
    Matrix affinity(edges.size(), 1);
    for (Eigen::Index r = 0; r < edges.size(); ++r)
      affinity(r, 0) = features.edge(edges.src[static_cast<std::size_t>(r)], edges.dst[static_cast<std::size_t>(r)]);
    GatedGcnState state{h, linear(Tensor::constant(std::move(affinity)), params, prefix + ".in_edge")};
    for (int l = 0; l < cfg.n_layers; ++l)
      state = gated_gcn_layer(state, edges, params, prefix + ".layer" + std::to_string(l), cfg.use_layer_norm);
    h = state.h;
  } else {
    for (int l = 0; l < cfg.n_layers; ++l)
      h = gat_layer(h, features.edge, params, prefix + ".layer" + std::to_string(l), cfg.n_heads, cfg.use_layer_norm);
  }
  return {h, ad::mean(h, 0)};
}

namespace {

Eigen::MatrixXd floyd_warshall(Eigen::MatrixXd d) {
  const Eigen::Index n = d.rows();
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (d(i, k) + d(k, j) < d(i, j))
          d(i, j) = d(i, k) + d(k, j);
  return d;
}

double median_off_diagonal(const Eigen::MatrixXd &w) {
  std::vector<double> values;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = i + 1; j < w.cols(); ++j)
      values.push_back(w(i, j));
  if (values.empty())
    return 0.0;
  auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

Eigen::MatrixXd hop_counts(const Eigen::MatrixXd &cost) {
  const Eigen::Index n = cost.rows();
  const double threshold = median_off_diagonal(cost);
  constexpr double kUnreached = -1.0;
  Eigen::MatrixXd hops = Eigen::MatrixXd::Constant(n, n, kUnreached);
  for (Eigen::Index s = 0; s < n; ++s) {
    std::deque<Eigen::Index> queue{s};
    hops(s, s) = 0.0;
    while (!queue.empty()) {
      const Eigen::Index u = queue.front();
      queue.pop_front();
      for (Eigen::Index v = 0; v < n; ++v)
        if (v != u && hops(s, v) == kUnreached && cost(u, v) <= threshold) {
          hops(s, v) = hops(s, u) + 1.0;
          queue.push_back(v);
        }
    }
  }
  const double diameter = hops.maxCoeff();
  return (hops.array() == kUnreached).select(diameter + 1.0, hops);
}

} // namespace

Eigen::MatrixXd build_distance_matrix(const Scenario &s, DistanceEncodingConfig::DistanceKind kind) {
  if (kind == DistanceEncodingConfig::DistanceKind::HopCount)
    return hop_counts(s.pathloss_db);
  return floyd_warshall(s.pathloss_db);
}

Eigen::MatrixXd build_distance_matrix(const TspInstance &inst, DistanceEncodingConfig::DistanceKind kind) {
  if (kind == DistanceEncodingConfig::DistanceKind::HopCount)
    return hop_counts(inst.dist);
  return floyd_warshall(inst.dist);
}

Eigen::MatrixXd normalize_distance(const Eigen::MatrixXd &distance) {
  const Eigen::Index n = distance.rows();
  if (n < 2)
    return distance;
  const double mean = distance.sum() / static_cast<double>(n * (n - 1));
  return mean > 0.0 ? Eigen::MatrixXd(distance / mean) : distance;
}

std::string to_string(EncoderConfig::Kind kind) { return kind == EncoderConfig::Kind::GAT ? "gat" : "gated_gcn"; }

std::string to_string(DistanceEncodingConfig::DistanceKind kind) {
  return kind == DistanceEncodingConfig::DistanceKind::HopCount ? "hop_count" : "shortest_path";
}

} // namespace rrm
