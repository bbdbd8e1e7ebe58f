#ifndef RRM_POLICY_HPP
#define RRM_POLICY_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "rrm/encoder.hpp"
#include "rrm/params.hpp"

namespace rrm {

enum class EnvKind { Pcap, Tsp };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string &name);

struct DecoderConfig {
  enum class Mode { AttentionDecoder, EncoderOnly };
  Mode mode = Mode::AttentionDecoder;
  int context_len = 3;
  bool reembed = true;
  double logit_clip = 10.0;
  /// Encode once per rollout. Only legal for DistanceEncoded variants, and implies reembed == false.
  bool fixed_embeddings = false;
  int glimpse_heads = 4;

  static DecoderConfig pcap_defaults() { return {}; }
  static DecoderConfig tsp_defaults();

  /// Throws ConfigError naming the offending field.
  void validate(const FeatureVariant &variant, int hidden_dim) const;
  /// The encoder runs at step 0 and, when re-embedding, at every later step.
  bool encodes_at(int step) const { return step == 0 || reembed; }
};

std::string to_string(DecoderConfig::Mode mode);

struct PolicyConfig {
  EnvKind env = EnvKind::Pcap;
  EncoderConfig encoder;
  DecoderConfig decoder;
  DistanceEncodingConfig distance;
  int n_power = 2;    ///< PCAP only
  int n_channels = 2; ///< PCAP only

  const FeatureVariant &variant() const { return encoder.variant; }
  int actions_per_item() const { return env == EnvKind::Pcap ? n_power * n_channels : 1; }
  /// Width of the node features fed to the encoder input projection.
  int input_dim() const;
  void validate() const;
};

nlohmann::json to_json(const PolicyConfig &cfg);
/// Missing fields keep defaults; decoder defaults depend on "env". The distance-encoding
/// width follows variant.k.
PolicyConfig policy_config_from_json(const nlohmann::json &j);

/// Encoder plus decoder parameters with their configuration.
class Policy {
public:
  Policy(PolicyConfig cfg, std::uint64_t seed);
  Policy(PolicyConfig cfg, ParamStore params);

  const PolicyConfig &config() const { return cfg_; }
  ParamStore &params() { return params_; }
  const ParamStore &params() const { return params_; }

  /// Read-only copy for gradient-free evaluation.
  Policy snapshot() const { return Policy(cfg_, params_.snapshot()); }

  void save(const std::filesystem::path &dir, std::int64_t optimizer_step = 0,
            const nlohmann::json &extra = nlohmann::json::object()) const;
  /// Throws ValidationError if the manifest lacks a policy config or a parameter is missing.
  static Policy load(const std::filesystem::path &dir);

private:
  PolicyConfig cfg_;
  ParamStore params_;
};

void init_decoder_params(ParamStore &params, const PolicyConfig &cfg, std::mt19937_64 &rng,
                         const std::string &prefix = "dec");

} // namespace rrm

#endif // RRM_POLICY_HPP
