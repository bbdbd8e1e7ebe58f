#include "rrm/policy.hpp"

#include <algorithm>

#include "rrm/errors.hpp"
#include "rrm/json_io.hpp"
#include "rrm/pcap_env.hpp"
#include "rrm/tsp_env.hpp"

namespace rrm {

std::string to_string(EnvKind kind) { return kind == EnvKind::Tsp ? "tsp" : "pcap"; }

EnvKind env_kind_from_string(const std::string &name) {
  if (name == "pcap")
    return EnvKind::Pcap;
  if (name == "tsp")
    return EnvKind::Tsp;
  throw ConfigError("env", "unknown environment '" + name + "'");
}

DecoderConfig DecoderConfig::tsp_defaults() {
  DecoderConfig cfg;
  cfg.reembed = false;
  return cfg;
}

void DecoderConfig::validate(const FeatureVariant &variant, int hidden_dim) const {
  if (context_len < 0)
    throw ConfigError("decoder.context_len", "must be >= 0");
  if (!(logit_clip > 0.0))
    throw ConfigError("decoder.logit_clip", "must be positive");
  if (fixed_embeddings && !variant.is_distance_encoded())
    throw ConfigError("decoder.fixed_embeddings", "requires the distance_encoded variant");
  if (fixed_embeddings && reembed)
    throw ConfigError("decoder.fixed_embeddings", "cannot be combined with reembed");
  if (mode == Mode::AttentionDecoder && (glimpse_heads < 1 || hidden_dim % glimpse_heads != 0))
    throw ConfigError("decoder.glimpse_heads", "must divide encoder.hidden_dim");
}

std::string to_string(DecoderConfig::Mode mode) {
  return mode == DecoderConfig::Mode::EncoderOnly ? "encoder_only" : "attention";
}

int PolicyConfig::input_dim() const {
  int base = 0;
  if (env == EnvKind::Pcap)
    base = 3 + n_power + n_channels;
  else
    base = tsp_base_feature_width(variant());
  return base + (variant().is_distance_encoded() ? variant().k : 0);
}

void PolicyConfig::validate() const {
  encoder.validate();
  decoder.validate(variant(), encoder.hidden_dim);
  if (variant().is_distance_encoded()) {
    distance.validate();
    if (distance.k != variant().k)
      throw ConfigError("distance_encoding.k", "must equal variant.k");
  }
  if (env == EnvKind::Pcap) {
    if (variant().kind == FeatureVariant::Kind::Coords)
      throw ConfigError("variant", "PCAP instances have no coordinate features");
    if (n_power < 1)
      throw ConfigError("n_power", "must be >= 1");
    if (n_channels < 1)
      throw ConfigError("n_channels", "must be >= 1");
  }
}

nlohmann::json to_json(const PolicyConfig &cfg) {
  const auto &e = cfg.encoder;
  const auto &d = cfg.decoder;
  return json{{"env", to_string(cfg.env)},
              {"n_power", cfg.n_power},
              {"n_channels", cfg.n_channels},
              {"variant", {{"kind", to_string(cfg.variant().kind)}, {"k", cfg.variant().k}}},
              {"encoder",
               {{"kind", to_string(e.kind)},
                {"hidden_dim", e.hidden_dim},
                {"n_layers", e.n_layers},
                {"n_heads", e.n_heads},
                {"layer_norm", e.use_layer_norm}}},
              {"distance_encoding",
               {{"distance_kind", to_string(cfg.distance.distance_kind)},
                {"transform_hidden", cfg.distance.transform_hidden}}},
              {"decoder",
               {{"mode", to_string(d.mode)},
                {"context_len", d.context_len},
                {"reembed", d.reembed},
                {"logit_clip", d.logit_clip},
                {"fixed_embeddings", d.fixed_embeddings},
                {"glimpse_heads", d.glimpse_heads}}}};
}

PolicyConfig policy_config_from_json(const nlohmann::json &j) {
  if (!j.is_object())
    throw ConfigError("policy", "must be a JSON object");
  PolicyConfig cfg;
  std::string env = "pcap";
  optional_field(j, "env", env);
  cfg.env = env_kind_from_string(env);
  cfg.decoder = cfg.env == EnvKind::Tsp ? DecoderConfig::tsp_defaults() : DecoderConfig::pcap_defaults();
  optional_field(j, "n_power", cfg.n_power);
  optional_field(j, "n_channels", cfg.n_channels);

  if (j.contains("variant")) {
    const auto &v = j.at("variant");
    std::string kind = to_string(cfg.encoder.variant.kind);
    if (v.is_string()) {
      kind = v.get<std::string>();
    } else {
      optional_field(v, "kind", kind, "variant.");
      optional_field(v, "k", cfg.encoder.variant.k, "variant.");
    }
    cfg.encoder.variant.kind = feature_kind_from_string(kind);
  }
  if (!cfg.variant().is_distance_encoded())
    cfg.encoder.variant.k = 0;
  else if (cfg.encoder.variant.k == 0)
    cfg.encoder.variant.k = 1;
  cfg.distance.k = std::max(cfg.variant().k, 1);

  if (j.contains("encoder")) {
    const auto &e = j.at("encoder");
    std::string kind = to_string(cfg.encoder.kind);
    optional_field(e, "kind", kind, "encoder.");
    if (kind == "gat")
      cfg.encoder.kind = EncoderConfig::Kind::GAT;
    else if (kind == "gated_gcn")
      cfg.encoder.kind = EncoderConfig::Kind::GatedGCN;
    else
      throw ConfigError("encoder.kind", "unknown encoder '" + kind + "'");
    optional_field(e, "hidden_dim", cfg.encoder.hidden_dim, "encoder.");
    optional_field(e, "n_layers", cfg.encoder.n_layers, "encoder.");
    optional_field(e, "n_heads", cfg.encoder.n_heads, "encoder.");
    optional_field(e, "layer_norm", cfg.encoder.use_layer_norm, "encoder.");
  }
  if (j.contains("distance_encoding")) {
    const auto &de = j.at("distance_encoding");
    std::string kind = to_string(cfg.distance.distance_kind);
    optional_field(de, "distance_kind", kind, "distance_encoding.");
    if (kind == "hop_count")
      cfg.distance.distance_kind = DistanceEncodingConfig::DistanceKind::HopCount;
    else if (kind == "shortest_path")
      cfg.distance.distance_kind = DistanceEncodingConfig::DistanceKind::PathlossWeightedShortestPath;
    else
      throw ConfigError("distance_encoding.distance_kind", "unknown distance '" + kind + "'");
    optional_field(de, "transform_hidden", cfg.distance.transform_hidden, "distance_encoding.");
  }
  if (j.contains("decoder")) {
    const auto &d = j.at("decoder");
    std::string mode = to_string(cfg.decoder.mode);
    optional_field(d, "mode", mode, "decoder.");
    if (mode == "attention")
      cfg.decoder.mode = DecoderConfig::Mode::AttentionDecoder;
    else if (mode == "encoder_only")
      cfg.decoder.mode = DecoderConfig::Mode::EncoderOnly;
    else
      throw ConfigError("decoder.mode", "unknown decoder mode '" + mode + "'");
    optional_field(d, "context_len", cfg.decoder.context_len, "decoder.");
    optional_field(d, "reembed", cfg.decoder.reembed, "decoder.");
    optional_field(d, "logit_clip", cfg.decoder.logit_clip, "decoder.");
    optional_field(d, "fixed_embeddings", cfg.decoder.fixed_embeddings, "decoder.");
    optional_field(d, "glimpse_heads", cfg.decoder.glimpse_heads, "decoder.");
  }
  cfg.validate();
  return cfg;
}

void init_decoder_params(ParamStore &params, const PolicyConfig &cfg, std::mt19937_64 &rng,
                         const std::string &prefix) {
  const int d = cfg.encoder.hidden_dim;
  const int actions = cfg.actions_per_item();
  const auto &dec = cfg.decoder;
  if (dec.mode == DecoderConfig::Mode::EncoderOnly) {
    params.add(prefix + ".linear.W", xavier_uniform(d, actions, rng));
    params.add(prefix + ".linear.b", ad::Matrix::Zero(1, actions));
    return;
  }
  // PCAP slots: graph + context_len chosen APs. TSP slots: graph + first + last node.
  const int slots = cfg.env == EnvKind::Pcap ? dec.context_len : 2;
  const int context_dim = d * (1 + slots);
  const int dh = d / dec.glimpse_heads;
  params.add(prefix + ".placeholder", xavier_uniform(1, cfg.env == EnvKind::Pcap ? d : 2 * d, rng));
  for (int h = 0; h < dec.glimpse_heads; ++h) {
    const std::string hp = prefix + ".glimpse.head" + std::to_string(h);
    params.add(hp + ".Wq", xavier_uniform(context_dim, dh, rng));
    params.add(hp + ".Wk", xavier_uniform(d, dh, rng));
    params.add(hp + ".Wv", xavier_uniform(d, dh, rng));
  }
  params.add(prefix + ".glimpse.Wo", xavier_uniform(d, d, rng));
  params.add(prefix + ".compat.Wq", xavier_uniform(d, d, rng));
  params.add(prefix + ".compat.Wk", xavier_uniform(d, d, rng));
  if (cfg.env == EnvKind::Pcap) {
    // Row 0: unassigned AP; row 1 + a: AP holding local action a.
    params.add(prefix + ".state_embed", xavier_uniform(actions + 1, d, rng));
    params.add(prefix + ".head1.We", xavier_uniform(d, d, rng));
    params.add(prefix + ".head1.Wg", xavier_uniform(d, d, rng));
    params.add(prefix + ".head1.b", ad::Matrix::Zero(1, d));
    params.add(prefix + ".head2.W", xavier_uniform(d, actions, rng));
    params.add(prefix + ".head2.b", ad::Matrix::Zero(1, actions));
  }
}

Policy::Policy(PolicyConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  init_encoder_params(params_, cfg_.encoder, cfg_.input_dim(), rng);
  if (cfg_.variant().is_distance_encoded())
    init_distance_encoding_params(params_, cfg_.distance, rng);
  init_decoder_params(params_, cfg_, rng);
}

Policy::Policy(PolicyConfig cfg, ParamStore params) : cfg_(std::move(cfg)), params_(std::move(params)) {
  cfg_.validate();
}

void Policy::save(const std::filesystem::path &dir, std::int64_t optimizer_step, const nlohmann::json &extra) const {
  json metadata = extra;
  metadata["policy"] = to_json(cfg_);
  save_checkpoint(dir, params_, metadata, optimizer_step);
}

Policy Policy::load(const std::filesystem::path &dir) {
  Checkpoint ck = load_checkpoint(dir);
  if (!ck.metadata.contains("policy"))
    throw ValidationError("metadata.policy", "checkpoint carries no policy config");
  PolicyConfig cfg = policy_config_from_json(ck.metadata.at("policy"));
  // Shapes are checked against a freshly initialized policy of the same config.
  Policy reference(cfg, std::uint64_t{0});
  for (const auto &[name, t] : reference.params().items()) {
    if (!ck.params.contains(name))
      throw ValidationError("tensors", "missing parameter '" + name + "'");
    const auto &loaded = ck.params.get(name);
    if (loaded.rows() != t.rows() || loaded.cols() != t.cols())
      throw ValidationError("tensors", "shape mismatch for '" + name + "'");
  }
  return Policy(std::move(cfg), std::move(ck.params));
}

} // namespace rrm
