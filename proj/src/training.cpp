#include "rrm/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rrm/errors.hpp"
#include "rrm/json_io.hpp"

namespace rrm {

namespace {

constexpr std::uint64_t kValidationStream = 1;
constexpr std::uint64_t kFixedPoolStream = 2;
constexpr std::uint64_t kInitStream = 3;
constexpr std::uint64_t kEpochStream = 1000;
constexpr std::uint64_t kSampleStream = 1'000'000;

std::string to_string(BaselineKind kind) {
  return kind == BaselineKind::GreedyRollout ? "greedy_rollout" : "ema";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace

void TrainConfig::validate() const {
  if (n_epochs < 1)
    throw ConfigError("n_epochs", "must be >= 1");
  if (instances_per_epoch < 1)
    throw ConfigError("instances_per_epoch", "must be >= 1");
  if (batch_size < 1 || batch_size > instances_per_epoch)
    throw ConfigError("batch_size", "must be in [1, instances_per_epoch]");
  if (!(lr > 0.0))
    throw ConfigError("lr", "must be positive");
  if (!(ema_beta >= 0.0 && ema_beta < 1.0))
    throw ConfigError("ema_beta", "must be in [0, 1)");
  if (fixed_instances < 0)
    throw ConfigError("fixed_instances", "must be >= 0");
  if (validation_size < 1)
    throw ConfigError("validation_size", "must be >= 1");
  if (env == EnvKind::Pcap)
    scenario.validate();
  else if (tsp_n < 3)
    throw ConfigError("tsp_n", "must be >= 3");
  if (policy.env != env)
    throw ConfigError("policy.env", "does not match env");
  policy.validate();
}

TrainConfig train_config_from_json(const nlohmann::json &j) {
  if (!j.is_object())
    throw ConfigError("train", "must be a JSON object");
  TrainConfig cfg;
  std::string env = "pcap";
  optional_field(j, "env", env);
  cfg.env = env_kind_from_string(env);
  if (j.contains("scenario"))
    cfg.scenario = scenario_config_from_json(j.at("scenario"));
  optional_field(j, "tsp_n", cfg.tsp_n);
  optional_field(j, "n_epochs", cfg.n_epochs);
  optional_field(j, "instances_per_epoch", cfg.instances_per_epoch);
  optional_field(j, "batch_size", cfg.batch_size);
  optional_field(j, "lr", cfg.lr);
  std::string baseline = "ema";
  optional_field(j, "baseline", baseline);
  if (baseline == "ema")
    cfg.baseline = BaselineKind::ExponentialMovingAverage;
  else if (baseline == "greedy_rollout")
    cfg.baseline = BaselineKind::GreedyRollout;
  else
    throw ConfigError("baseline", "unknown baseline '" + baseline + "'");
  optional_field(j, "ema_beta", cfg.ema_beta);
  optional_field(j, "seed", cfg.seed);
  optional_field(j, "fixed_instances", cfg.fixed_instances);
  optional_field(j, "validation_size", cfg.validation_size);

  json policy = j.contains("policy") ? j.at("policy") : j;
  policy["env"] = to_string(cfg.env);
  policy["n_power"] = cfg.scenario.n_power();
  policy["n_channels"] = cfg.scenario.n_channels();
  cfg.policy = policy_config_from_json(policy);
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const TrainConfig &cfg) {
  return json{{"env", to_string(cfg.env)},
              {"scenario", to_json(cfg.scenario)},
              {"tsp_n", cfg.tsp_n},
              {"policy", to_json(cfg.policy)},
              {"n_epochs", cfg.n_epochs},
              {"instances_per_epoch", cfg.instances_per_epoch},
              {"batch_size", cfg.batch_size},
              {"lr", cfg.lr},
              {"baseline", to_string(cfg.baseline)},
              {"ema_beta", cfg.ema_beta},
              {"seed", cfg.seed},
              {"fixed_instances", cfg.fixed_instances},
              {"validation_size", cfg.validation_size}};
}

void EmaBaseline::update(double batch_mean) {
  value_ = value_ ? beta_ * *value_ + (1.0 - beta_) * batch_mean : batch_mean;
  ++updates_;
}

nlohmann::json to_json(const TrainReport &report) {
  json epochs = json::array();
  for (const auto &e : report.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_reward", e.train_reward},
                      {"val_reward", e.val_reward},
                      {"loss", e.loss},
                      {"baseline", e.baseline},
                      {"wall_time_s", e.wall_time_s}});
  return json{{"epochs", epochs},
              {"initial_val_reward", report.initial_val_reward},
              {"best_val_reward", report.best_val_reward},
              {"best_epoch", report.best_epoch},
              {"checkpoint", report.checkpoint_path}};
}

std::string curve_csv(const TrainReport &report) {
  std::ostringstream out;
  out << "epoch,train_reward,val_reward,loss\n";
  for (const auto &e : report.epochs)
    out << e.epoch << ',' << fmt(e.train_reward) << ',' << fmt(e.val_reward) << ',' << fmt(e.loss) << '\n';
  return out.str();
}

namespace {

ScenarioConfig with_seed(ScenarioConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

template <typename Instance> Instance make_instance(const TrainConfig &cfg, std::uint64_t seed);

template <> Scenario make_instance<Scenario>(const TrainConfig &cfg, std::uint64_t seed) {
  return generate_scenario(with_seed(cfg.scenario, seed));
}

template <> TspInstance make_instance<TspInstance>(const TrainConfig &cfg, std::uint64_t seed) {
  return generate_tsp(cfg.tsp_n, seed);
}

template <typename Instance> std::vector<Instance> stream(const TrainConfig &cfg, std::uint64_t tag, int count) {
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(count));
  const std::uint64_t base = mix_seed(cfg.seed, tag);
  for (int i = 0; i < count; ++i)
    out.push_back(make_instance<Instance>(cfg, mix_seed(base, static_cast<std::uint64_t>(i))));
  return out;
}

template <typename Instance> std::vector<Instance> training_instances(const TrainConfig &cfg, int epoch) {
  if (cfg.fixed_instances == 0)
    return stream<Instance>(cfg, kEpochStream + static_cast<std::uint64_t>(epoch), cfg.instances_per_epoch);
  const auto pool = stream<Instance>(cfg, kFixedPoolStream, cfg.fixed_instances);
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(cfg.instances_per_epoch));
  for (int i = 0; i < cfg.instances_per_epoch; ++i)
    out.push_back(pool[static_cast<std::size_t>(i % cfg.fixed_instances)]);
  return out;
}

template <typename Instance> std::vector<Instance> validation_instances(const TrainConfig &cfg) {
  if (cfg.fixed_instances > 0)
    return stream<Instance>(cfg, kFixedPoolStream, cfg.fixed_instances);
  return stream<Instance>(cfg, kValidationStream, cfg.validation_size);
}

void ensure_grad_buffers(Policy &policy) {
  for (const auto &[name, t] : policy.params().items()) {
    ad::Tensor p = t;
    if (!p.has_grad())
      p.mutable_grad() = ad::Matrix::Zero(p.rows(), p.cols());
  }
}

template <typename Instance>
EpochStats run_epoch(Policy &policy, ad::Adam &optimizer, const std::vector<Instance> &instances,
                     BaselineState &baseline, const TrainConfig &cfg, std::uint64_t sample_seed) {
  if (instances.empty())
    throw ContractViolation("reinforce_epoch: no instances");
  EpochStats stats;
  double reward_sum = 0.0;
  double loss_sum = 0.0;
  double baseline_sum = 0.0;
  int batches = 0;
  const auto n = instances.size();
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    const auto count = static_cast<double>(end - start);
    // Sampling runs on a frozen copy so no autodiff graph outlives its rollout.
    const Policy frozen = policy.snapshot();
    std::vector<RolloutTrace> traces;
    traces.reserve(end - start);
    double batch_reward = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      traces.push_back(rollout(instances[i], frozen, Sampling::sample(mix_seed(sample_seed, i))));
      batch_reward += traces.back().reward;
    }
    const double batch_mean = batch_reward / count;

    std::vector<double> b(traces.size());
    if (baseline.kind == BaselineKind::GreedyRollout) {
      for (std::size_t k = 0; k < traces.size(); ++k)
        b[k] = rollout(instances[start + k], *baseline.greedy_policy, Sampling::greedy()).reward;
    } else {
      std::fill(b.begin(), b.end(), baseline.ema.value_or(batch_mean));
    }

    std::vector<double> weight(traces.size());
    double loss_value = 0.0;
    for (std::size_t k = 0; k < traces.size(); ++k) {
      weight[k] = -(traces[k].reward - b[k]) / count;
      loss_value += weight[k] * traces[k].total_log_prob.item();
      baseline_sum += b[k];
    }
    if (!std::isfinite(loss_value)) {
      std::ostringstream msg;
      msg << "non-finite loss " << loss_value << " at batch starting " << start << "; rewards:";
      for (std::size_t k = 0; k < traces.size(); ++k)
        msg << ' ' << traces[k].reward << " (logp " << traces[k].total_log_prob.item() << ", baseline " << b[k]
            << ')';
      throw TrainingError(msg.str());
    }
    // Each trajectory is replayed with live parameters and back-propagated alone; leaf gradients accumulate,
    // so peak memory is one rollout graph rather than a batch of them.
    ensure_grad_buffers(policy);
    for (std::size_t k = 0; k < traces.size(); ++k) {
      const auto live = rollout(instances[start + k], policy, Sampling::replay(traces[k].flat_actions()));
      ad::scale(live.total_log_prob, weight[k]).backward();
    }
    optimizer.step();
    if (baseline.kind == BaselineKind::ExponentialMovingAverage)
      baseline.ema.update(batch_mean);

    reward_sum += batch_reward;
    loss_sum += loss_value;
    ++batches;
  }
  stats.train_reward = reward_sum / static_cast<double>(n);
  stats.loss = loss_sum / batches;
  stats.baseline = baseline_sum / static_cast<double>(n);
  return stats;
}

template <typename Instance>
ValidationResult validate_greedy(const Policy &policy, const std::vector<Instance> &instances,
                                 const std::vector<std::optional<double>> &references) {
  if (!references.empty() && references.size() != instances.size())
    throw ContractViolation("greedy_validate: references do not match the instances");
  const Policy frozen = policy.snapshot();
  ValidationResult out;
  double gap_sum = 0.0;
  bool gaps = !references.empty();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const double r = rollout(instances[i], frozen, Sampling::greedy()).reward;
    out.rewards.push_back(r);
    out.mean_reward += r;
    if (!gaps)
      continue;
    if (!references[i]) {
      gaps = false;
      continue;
    }
    const double ref = *references[i];
    if constexpr (std::is_same_v<Instance, TspInstance>)
      gap_sum += tour_gap(ref, -r);
    else
      gap_sum += (ref - r) / ref;
  }
  const auto n = static_cast<double>(instances.size());
  out.mean_reward /= n;
  if (gaps)
    out.mean_gap = gap_sum / n;
  return out;
}

template <typename Instance> TrainResult train_impl(const TrainConfig &cfg, const TrainOptions &opts) {
  cfg.validate();
  Policy policy(cfg.policy, mix_seed(cfg.seed, kInitStream));
  ad::Adam optimizer(policy.params().tensors(), {cfg.lr});
  const auto validation = validation_instances<Instance>(cfg);

  BaselineState baseline;
  baseline.kind = cfg.baseline;
  baseline.ema = EmaBaseline(cfg.ema_beta);

  TrainResult result{TrainReport{}, policy.snapshot(), policy.snapshot()};
  TrainReport &report = result.report;
  report.initial_val_reward = validate_greedy(policy, validation, {}).mean_reward;
  if (cfg.baseline == BaselineKind::GreedyRollout) {
    baseline.greedy_policy = policy.snapshot();
    baseline.greedy_val_reward = report.initial_val_reward;
  }

  std::optional<std::filesystem::path> ckpt_dir;
  if (opts.out_dir) {
    std::filesystem::create_directories(*opts.out_dir);
    ckpt_dir = *opts.out_dir / "checkpoint";
    report.checkpoint_path = ckpt_dir->string();
  }

  for (int epoch = 1; epoch <= cfg.n_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto instances = training_instances<Instance>(cfg, epoch);
    EpochStats stats = run_epoch(policy, optimizer, instances, baseline, cfg,
                                 mix_seed(cfg.seed, kSampleStream + static_cast<std::uint64_t>(epoch)));
    stats.epoch = epoch;
    stats.val_reward = validate_greedy(policy, validation, {}).mean_reward;
    stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(stats);

    if (cfg.baseline == BaselineKind::GreedyRollout && stats.val_reward > baseline.greedy_val_reward) {
      baseline.greedy_policy = policy.snapshot();
      baseline.greedy_val_reward = stats.val_reward;
    }
    if (epoch == 1 || stats.val_reward > report.best_val_reward) {
      report.best_val_reward = stats.val_reward;
      report.best_epoch = epoch;
      result.best_policy = policy.snapshot();
      if (ckpt_dir)
        policy.save(*ckpt_dir, optimizer.steps(), {{"epoch", epoch}, {"val_reward", stats.val_reward}});
    }
    if (opts.on_epoch)
      opts.on_epoch(stats);
  }
  result.final_policy = policy.snapshot();

  if (opts.out_dir) {
    json j = to_json(report);
    j["config"] = to_json(cfg);
    write_json_file(*opts.out_dir / "report.json", j);
    std::ofstream csv(*opts.out_dir / "curve.csv", std::ios::binary);
    csv << curve_csv(report);
    if (!csv)
      throw std::runtime_error("cannot write " + (*opts.out_dir / "curve.csv").string());
  }
  return result;
}

} // namespace

EpochStats reinforce_epoch(Policy &policy, ad::Adam &optimizer, const std::vector<Scenario> &instances,
                           BaselineState &baseline, const TrainConfig &cfg, std::uint64_t sample_seed) {
  return run_epoch(policy, optimizer, instances, baseline, cfg, sample_seed);
}

EpochStats reinforce_epoch(Policy &policy, ad::Adam &optimizer, const std::vector<TspInstance> &instances,
                           BaselineState &baseline, const TrainConfig &cfg, std::uint64_t sample_seed) {
  return run_epoch(policy, optimizer, instances, baseline, cfg, sample_seed);
}

ValidationResult greedy_validate(const Policy &policy, const std::vector<Scenario> &instances,
                                 const std::vector<std::optional<double>> &references) {
  return validate_greedy(policy, instances, references);
}

ValidationResult greedy_validate(const Policy &policy, const std::vector<TspInstance> &instances,
                                 const std::vector<std::optional<double>> &references) {
  return validate_greedy(policy, instances, references);
}

std::vector<Scenario> pcap_training_instances(const TrainConfig &cfg, int epoch) {
  return training_instances<Scenario>(cfg, epoch);
}
std::vector<Scenario> pcap_validation_instances(const TrainConfig &cfg) { return validation_instances<Scenario>(cfg); }
std::vector<TspInstance> tsp_training_instances(const TrainConfig &cfg, int epoch) {
  return training_instances<TspInstance>(cfg, epoch);
}
std::vector<TspInstance> tsp_validation_instances(const TrainConfig &cfg) {
  return validation_instances<TspInstance>(cfg);
}

TrainResult train(const TrainConfig &cfg, const TrainOptions &opts) {
  if (cfg.env == EnvKind::Tsp)
    return train_impl<TspInstance>(cfg, opts);
  return train_impl<Scenario>(cfg, opts);
}

} // namespace rrm
