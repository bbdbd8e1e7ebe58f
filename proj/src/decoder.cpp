#include "rrm/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rrm/errors.hpp"

namespace rrm {

using ad::Matrix;
using ad::Tensor;

Eigen::RowVectorXd StepDistribution::probs() const {
  const Matrix &lp = log_probs.value();
  Eigen::RowVectorXd p(lp.cols());
  for (Eigen::Index i = 0; i < lp.cols(); ++i)
    p(i) = mask(0, i) ? std::exp(lp(0, i)) : 0.0;
  return p;
}

double StepDistribution::item_marginal(int item) const {
  return probs().segment(static_cast<Eigen::Index>(item) * block, block).sum();
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

ad::Mask expand_mask(const std::vector<bool> &item_mask, int block) {
  const auto n = static_cast<Eigen::Index>(item_mask.size());
  ad::Mask m(1, n * block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int b = 0; b < block; ++b)
      m(0, i * block + b) = item_mask[static_cast<std::size_t>(i)];
  return m;
}

void require_unmasked(const std::vector<bool> &mask, const char *op) {
  if (std::none_of(mask.begin(), mask.end(), [](bool v) { return v; }))
    throw ContractViolation(std::string(op) + ": every item is masked");
}

Tensor leading_rows(const Tensor &x, Eigen::Index n) {
  if (x.rows() == n)
    return x;
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return ad::index_select(x, rows);
}

/// Multi-head attention of a 1 x D context over `items`, restricted to unmasked items.
Tensor glimpse(const Tensor &context, const Tensor &items, const ad::Mask &item_mask, const ParamStore &params,
               const std::string &prefix, int heads) {
  std::vector<Tensor> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const std::string hp = prefix + ".glimpse.head" + std::to_string(h);
    const Tensor q = ad::matmul(context, params.get(hp + ".Wq"));
    const Tensor k = ad::matmul(items, params.get(hp + ".Wk"));
    const Tensor v = ad::matmul(items, params.get(hp + ".Wv"));
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    const Tensor att = ad::masked_row_softmax(ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt), item_mask);
    outs.push_back(ad::matmul(att, v));
  }
  return ad::matmul(ad::concat(outs, 1), params.get(prefix + ".glimpse.Wo"));
}

/// clip * tanh(q . k_i / sqrt(d)) for every item, as a 1 x n row.
Tensor compatibility(const Tensor &g, const Tensor &items, const ParamStore &params, const std::string &prefix,
                     double clip) {
  const Tensor q = ad::matmul(g, params.get(prefix + ".compat.Wq"));
  const Tensor k = ad::matmul(items, params.get(prefix + ".compat.Wk"));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  return ad::scale(ad::tanh(ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt)), clip);
}

int choose(const StepDistribution &dist, const Sampling &sampling, std::mt19937_64 &rng, std::size_t step) {
  const Matrix &lp = dist.log_probs.value();
  const Eigen::Index size = lp.cols();
  switch (sampling.kind) {
  case Sampling::Kind::Replay: {
    if (step >= sampling.actions.size())
      throw ContractViolation("rollout: replay sequence is too short");
    const int flat = sampling.actions[step];
    if (flat < 0 || flat >= size || !dist.mask(0, flat))
      throw ContractViolation("rollout: replayed action " + std::to_string(flat) + " is not available");
    return flat;
  }
  case Sampling::Kind::Greedy: {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < size; ++i)
      if (dist.mask(0, i) && (best < 0 || lp(0, i) > lp(0, best)))
        best = i;
    return static_cast<int>(best);
  }
  case Sampling::Kind::Sample: {
    const Eigen::RowVectorXd p = dist.probs();
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double cumulative = 0.0;
    Eigen::Index last = -1;
    for (Eigen::Index i = 0; i < size; ++i) {
      if (!dist.mask(0, i))
        continue;
      cumulative += p(i);
      last = i;
      if (u < cumulative)
        return static_cast<int>(i);
    }
    return static_cast<int>(last);
  }
  }
  return -1;
}

void add_step(RolloutTrace &trace, const StepDistribution &dist, int flat, std::array<int, 3> action,
              const RolloutOptions &opts, const Embeddings &emb) {
  const Tensor lp = ad::element(dist.log_probs, 0, flat);
  trace.total_log_prob = trace.total_log_prob.defined() ? ad::add(trace.total_log_prob, lp) : lp;
  trace.steps.push_back({flat, action, lp.item()});
  if (opts.record_distributions)
    trace.distributions.push_back(dist);
  if (opts.record_embeddings)
    trace.embeddings.push_back(emb.node.value());
}

} // namespace

StepDistribution decode_step(const Embeddings &emb, std::span<const int> order, std::span<const int> chosen,
                             const ParamStore &params, const PolicyConfig &cfg, const std::string &prefix) {
  const auto n = static_cast<Eigen::Index>(chosen.size());
  const int block = cfg.actions_per_item();
  const auto &dec = cfg.decoder;
  std::vector<bool> ap_mask(chosen.size());
  std::vector<Eigen::Index> state_rows(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (chosen[i] < -1 || chosen[i] >= block)
      throw ContractViolation("decode_step: action " + std::to_string(chosen[i]) + " out of range");
    ap_mask[i] = chosen[i] < 0;
    state_rows[i] = chosen[i] + 1;
  }
  require_unmasked(ap_mask, "decode_step");
  if (static_cast<Eigen::Index>(order.size()) != n - std::count(ap_mask.begin(), ap_mask.end(), true))
    throw ContractViolation("decode_step: order does not match the assigned APs");
  const Tensor aps = ad::add(leading_rows(emb.node, n), ad::index_select(params.get(prefix + ".state_embed"), state_rows));

  std::vector<Tensor> parts{emb.graph};
  const Tensor &placeholder = params.get(prefix + ".placeholder");
  const auto n_chosen = static_cast<int>(order.size());
  for (int slot = 0; slot < dec.context_len; ++slot) {
    const int idx = n_chosen - dec.context_len + slot;
    if (idx < 0) {
      parts.push_back(placeholder);
      continue;
    }
    const int ap = order[static_cast<std::size_t>(idx)];
    if (ap < 0 || ap >= n || ap_mask[static_cast<std::size_t>(ap)])
      throw ContractViolation("decode_step: context AP " + std::to_string(ap) + " was not chosen before");
    parts.push_back(ad::index_select(aps, std::vector<Eigen::Index>{ap}));
  }
  const Tensor ctx = ad::concat(parts, 1);
  // The glimpse also sees assigned APs, whose state rows carry their actions.
  const ad::Mask everyone = ad::Mask::Constant(1, n, true);
  const Tensor g = glimpse(ctx, aps, everyone, params, prefix, dec.glimpse_heads);
  const Tensor scores = compatibility(g, aps, params, prefix, dec.logit_clip);

  Tensor hidden = ad::add(ad::matmul(aps, params.get(prefix + ".head1.We")),
                          ad::add(ad::matmul(g, params.get(prefix + ".head1.Wg")), params.get(prefix + ".head1.b")));
  hidden = ad::relu(hidden);
  const Tensor head = ad::add(ad::matmul(hidden, params.get(prefix + ".head2.W")), params.get(prefix + ".head2.b"));
  const Tensor spread = ad::matmul(ad::reshape(scores, n, 1), Tensor::constant(Matrix::Ones(1, block)));
  const Tensor joint = ad::reshape(ad::add(head, spread), 1, n * block);

  StepDistribution out;
  out.mask = expand_mask(ap_mask, block);
  out.log_probs = ad::masked_row_log_softmax(joint, out.mask);
  out.n_items = static_cast<int>(n);
  out.block = block;
  return out;
}

StepDistribution encoder_only_step(const Embeddings &emb, const std::vector<bool> &mask, const ParamStore &params,
                                   const PolicyConfig &cfg, const std::string &prefix) {
  require_unmasked(mask, "encoder_only_step");
  const auto n = static_cast<Eigen::Index>(mask.size());
  const int block = cfg.actions_per_item();
  const Tensor items = leading_rows(emb.node, n);
  const Tensor logits = ad::add(ad::matmul(items, params.get(prefix + ".linear.W")), params.get(prefix + ".linear.b"));

  StepDistribution out;
  out.mask = expand_mask(mask, block);
  out.log_probs = ad::masked_row_log_softmax(ad::reshape(logits, 1, n * block), out.mask);
  out.n_items = static_cast<int>(n);
  out.block = block;
  return out;
}

StepDistribution tsp_decode_step(const Embeddings &emb, std::optional<int> first, std::optional<int> last,
                                 const std::vector<bool> &unvisited, const ParamStore &params,
                                 const PolicyConfig &cfg, const std::string &prefix) {
  require_unmasked(unvisited, "tsp_decode_step");
  const auto n = static_cast<Eigen::Index>(unvisited.size());
  if (emb.node.rows() != n)
    throw ContractViolation("tsp_decode_step: embeddings do not match the node mask");
  if (first.has_value() != last.has_value())
    throw ContractViolation("tsp_decode_step: first and last must be given together");
  Tensor ctx;
  if (first) {
    ctx = ad::concat({emb.graph, ad::index_select(emb.node, std::vector<Eigen::Index>{*first}),
                      ad::index_select(emb.node, std::vector<Eigen::Index>{*last})},
                     1);
  } else {
    ctx = ad::concat({emb.graph, params.get(prefix + ".placeholder")}, 1);
  }
  const auto &dec = cfg.decoder;
  const ad::Mask mask = expand_mask(unvisited, 1);
  const Tensor g = glimpse(ctx, emb.node, mask, params, prefix, dec.glimpse_heads);
  StepDistribution out;
  out.mask = mask;
  out.log_probs = ad::masked_row_log_softmax(compatibility(g, emb.node, params, prefix, dec.logit_clip), mask);
  out.n_items = static_cast<int>(n);
  out.block = 1;
  return out;
}

std::vector<int> RolloutTrace::flat_actions() const {
  std::vector<int> out;
  out.reserve(steps.size());
  for (const auto &s : steps)
    out.push_back(s.flat);
  return out;
}

namespace {

FeatureVariant base_variant(const FeatureVariant &v) {
  return v.is_distance_encoded() ? FeatureVariant::edge_aware() : v;
}

} // namespace

RolloutTrace rollout(const Scenario &s, const Policy &policy, const Sampling &sampling, const RolloutOptions &opts) {
  const PolicyConfig &cfg = policy.config();
  if (cfg.env != EnvKind::Pcap)
    throw ContractViolation("rollout: policy was built for TSP, not PCAP");
  if (cfg.n_power != s.config.n_power() || cfg.n_channels != s.config.n_channels())
    throw ContractViolation("rollout: policy action dims do not match the scenario");
  const ParamStore &params = policy.params();
  const int n_aps = s.n_aps();
  const int n_channels = s.config.n_channels();
  const int block = cfg.actions_per_item();
  const FeatureVariant node_variant = base_variant(cfg.variant());

  const Eigen::MatrixXd edge = edge_features(s, cfg.variant());
  std::optional<Eigen::MatrixXd> distance;
  if (cfg.variant().is_distance_encoded())
    distance = normalize_distance(build_distance_matrix(s, cfg.distance.distance_kind));

  std::mt19937_64 rng(sampling.seed);
  RolloutTrace trace;
  trace.assignment = Assignment(n_aps);
  std::vector<bool> mask(static_cast<std::size_t>(n_aps), true);
  std::vector<int> order;
  std::vector<int> chosen(static_cast<std::size_t>(n_aps), -1);
  Embeddings emb;
  for (int t = 0; t < n_aps; ++t) {
    if (cfg.decoder.encodes_at(t)) {
      const FeatureSet fs{node_features(s, trace.assignment, node_variant), edge, distance};
      emb = encode(fs, cfg.encoder, params, &cfg.distance);
      ++trace.encoder_calls;
    }
    const StepDistribution dist = cfg.decoder.mode == DecoderConfig::Mode::EncoderOnly
                                      ? encoder_only_step(emb, mask, params, cfg)
                                      : decode_step(emb, order, chosen, params, cfg);
    const int flat = choose(dist, sampling, rng, static_cast<std::size_t>(t));
    const int ap = flat / block;
    const int power = (flat % block) / n_channels;
    const int channel = flat % n_channels;
    add_step(trace, dist, flat, {ap, power, channel}, opts, emb);
    trace.assignment = apply_action(s, trace.assignment, ap, power, channel);
    mask[static_cast<std::size_t>(ap)] = false;
    order.push_back(ap);
    chosen[static_cast<std::size_t>(ap)] = flat % block;
  }
  trace.breakdown = reward(s, trace.assignment);
  trace.reward = trace.breakdown.reward;
  return trace;
}

RolloutTrace rollout(const TspInstance &inst, const Policy &policy, const Sampling &sampling,
                     const RolloutOptions &opts) {
  const PolicyConfig &cfg = policy.config();
  if (cfg.env != EnvKind::Tsp)
    throw ContractViolation("rollout: policy was built for PCAP, not TSP");
  const ParamStore &params = policy.params();
  const int n = inst.n();
  const FeatureVariant node_variant = base_variant(cfg.variant());

  std::optional<Eigen::MatrixXd> distance;
  if (cfg.variant().is_distance_encoded())
    distance = normalize_distance(build_distance_matrix(inst, cfg.distance.distance_kind));

  std::mt19937_64 rng(sampling.seed);
  RolloutTrace trace;
  PartialTour partial;
  std::vector<bool> unvisited(static_cast<std::size_t>(n), true);
  Embeddings emb;
  for (int t = 0; t < n; ++t) {
    if (cfg.decoder.encodes_at(t)) {
      FeatureSet fs = tsp_features(inst, partial, node_variant);
      fs.distance = distance;
      emb = encode(fs, cfg.encoder, params, &cfg.distance);
      ++trace.encoder_calls;
    }
    StepDistribution dist;
    if (cfg.decoder.mode == DecoderConfig::Mode::EncoderOnly) {
      dist = encoder_only_step(emb, unvisited, params, cfg);
    } else {
      std::optional<int> first;
      std::optional<int> last;
      if (!partial.visited.empty()) {
        first = partial.visited.front();
        last = partial.visited.back();
      }
      dist = tsp_decode_step(emb, first, last, unvisited, params, cfg);
    }
    const int node = choose(dist, sampling, rng, static_cast<std::size_t>(t));
    add_step(trace, dist, node, {node, 0, 0}, opts, emb);
    partial.visited.push_back(node);
    unvisited[static_cast<std::size_t>(node)] = false;
  }
  trace.tour = partial.visited;
  trace.tour_length = tour_length(inst, trace.tour);
  trace.reward = -trace.tour_length;
  return trace;
}

namespace {

template <typename Instance>
RolloutTrace best_of(const Instance &inst, const Policy &policy, int n, std::uint64_t seed) {
  if (n < 1)
    throw ContractViolation("best_of_samples: need at least one sample");
  const Policy frozen = policy.snapshot();
  RolloutTrace best;
  for (int i = 0; i < n; ++i) {
    RolloutTrace t = rollout(inst, frozen, Sampling::sample(mix_seed(seed, static_cast<std::uint64_t>(i))));
    if (i == 0 || t.reward > best.reward)
      best = std::move(t);
  }
  return best;
}

} // namespace

RolloutTrace best_of_samples(const Scenario &s, const Policy &policy, int n, std::uint64_t seed) {
  return best_of(s, policy, n, seed);
}

RolloutTrace best_of_samples(const TspInstance &inst, const Policy &policy, int n, std::uint64_t seed) {
  return best_of(inst, policy, n, seed);
}

nlohmann::json to_json(const RolloutTrace &trace) {
  nlohmann::json steps = nlohmann::json::array();
  const bool tsp = !trace.tour.empty();
  for (const auto &s : trace.steps) {
    nlohmann::json action = tsp ? nlohmann::json::array({s.action[0]})
                                : nlohmann::json::array({s.action[0], s.action[1], s.action[2]});
    steps.push_back({{"action", action}, {"logp", s.logp}});
  }
  return {{"steps", steps}, {"reward", trace.reward}};
}

} // namespace rrm
