#include "rrm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "rrm/decoder.hpp"
#include "rrm/errors.hpp"
#include "rrm/json_io.hpp"
#include "rrm/solvers.hpp"

namespace rrm {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_policy(MethodSpec::Kind k) { return k == MethodSpec::Kind::Policy || k == MethodSpec::Kind::PolicyGreedy; }

MethodSpec::Kind kind_from_string(const std::string &name, EnvKind env) {
  using K = MethodSpec::Kind;
  if (name == "policy")
    return K::Policy;
  if (name == "policy_greedy")
    return K::PolicyGreedy;
  if (name == "random")
    return K::RandomBest;
  if (env == EnvKind::Pcap) {
    if (name == "exhaustive")
      return K::Exhaustive;
    if (name == "local")
      return K::LocalSearch;
  } else {
    if (name == "exact")
      return K::TspExact;
    if (name == "heuristic")
      return K::TspHeuristic;
  }
  throw ConfigError("methods", "unknown method '" + name + "' for " + to_string(env));
}

} // namespace

MethodSpec method_from_json(const nlohmann::json &j, EnvKind env, const std::filesystem::path &base_dir) {
  MethodSpec m;
  std::string kind;
  std::string arg;
  if (j.is_string()) {
    const auto text = j.get<std::string>();
    const auto colon = text.find(':');
    kind = text.substr(0, colon);
    if (colon != std::string::npos)
      arg = text.substr(colon + 1);
    m.name = text;
  } else if (j.is_object()) {
    optional_field(j, "kind", kind, "methods.");
    optional_field(j, "name", m.name, "methods.");
    optional_field(j, "k", m.k, "methods.");
    optional_field(j, "checkpoint", arg, "methods.");
    if (j.contains("train"))
      m.train = train_config_from_json(j.at("train"));
  } else {
    throw ConfigError("methods", "each method must be a string or an object");
  }
  m.kind = kind_from_string(kind, env);
  if (m.kind == MethodSpec::Kind::RandomBest && j.is_string() && !arg.empty()) {
    try {
      m.k = std::stoi(arg);
    } catch (const std::exception &) {
      throw ConfigError("methods", "bad draw count in '" + m.name + "'");
    }
  }
  if (is_policy(m.kind)) {
    if (!arg.empty())
      m.checkpoint = std::filesystem::path(arg).is_absolute() ? std::filesystem::path(arg) : base_dir / arg;
    if (m.checkpoint.empty() && !m.train)
      throw ConfigError("methods", "policy method needs a checkpoint or a train section");
  }
  if (m.k < 1)
    throw ConfigError("methods.k", "must be >= 1");
  if (m.name.empty())
    m.name = kind + (m.kind == MethodSpec::Kind::RandomBest ? ":" + std::to_string(m.k) : "");
  return m;
}

void ExperimentSpec::validate() const {
  if (sizes.empty())
    throw ConfigError("sizes", "must not be empty");
  if (seeds.empty())
    throw ConfigError("seeds", "must not be empty");
  if (methods.empty())
    throw ConfigError("methods", "must not be empty");
  if (workers < 1)
    throw ConfigError("workers", "must be >= 1");
  for (int n : sizes)
    if (n < (env == EnvKind::Tsp ? 3 : 2))
      throw ConfigError("sizes", "size " + std::to_string(n) + " is too small");
  std::vector<std::string> names;
  for (const auto &m : methods)
    names.push_back(m.name);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw ConfigError("methods", "method names must be unique");
}

ExperimentSpec experiment_spec_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir) {
  if (!j.is_object())
    throw ConfigError("spec", "must be a JSON object");
  ExperimentSpec spec;
  std::string env = "pcap";
  optional_field(j, "env", env);
  spec.env = env_kind_from_string(env);
  optional_field(j, "sizes", spec.sizes);
  optional_field(j, "seeds", spec.seeds);
  if (j.contains("n_seeds")) {
    int n = 0;
    optional_field(j, "n_seeds", n);
    if (n < 1)
      throw ConfigError("n_seeds", "must be >= 1");
    spec.seeds.resize(static_cast<std::size_t>(n));
    std::iota(spec.seeds.begin(), spec.seeds.end(), std::uint64_t{0});
  }
  if (j.contains("scenario"))
    spec.scenario_overrides = j.at("scenario");
  optional_field(j, "exact_budget", spec.exact_budget);
  optional_field(j, "workers", spec.workers);
  if (!j.contains("methods") || !j.at("methods").is_array())
    throw ConfigError("methods", "must be an array");
  for (const auto &m : j.at("methods"))
    spec.methods.push_back(method_from_json(m, spec.env, base_dir));
  spec.validate();
  return spec;
}

ScenarioConfig experiment_scenario_config(const ExperimentSpec &spec, int size, std::uint64_t seed) {
  json merged = to_json(ScenarioConfig::for_size(size, seed));
  for (const auto &[key, value] : spec.scenario_overrides.items())
    merged[key] = value;
  merged["n_aps"] = size;
  merged["seed"] = seed;
  ScenarioConfig cfg = scenario_config_from_json(merged);
  cfg.validate();
  return cfg;
}

namespace {

struct Task {
  int size;
  std::uint64_t seed;
};

struct TaskOutput {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

TourResult random_tours(const TspInstance &inst, int k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tour tour(static_cast<std::size_t>(inst.n()));
  TourResult best;
  for (int i = 0; i < k; ++i) {
    std::iota(tour.begin(), tour.end(), 0);
    std::shuffle(tour.begin(), tour.end(), rng);
    const double len = tour_length(inst, tour);
    if (i == 0 || len < best.length)
      best = {tour, len};
  }
  return best;
}

TaskOutput run_pcap_task(const ExperimentSpec &spec, const Task &task,
                         const std::vector<std::shared_ptr<const Policy>> &policies) {
  TaskOutput out;
  const std::string id = "pcap-n" + std::to_string(task.size) + "-s" + std::to_string(task.seed);
  Scenario s;
  double r_star = 0.0;
  ReferenceKind ref_kind = ReferenceKind::Exact;
  try {
    s = generate_scenario(experiment_scenario_config(spec, task.size, task.seed));
    if (action_space_size(s.config) <= spec.exact_budget) {
      r_star = exhaustive(s, {spec.exact_budget, 1}).reward.reward;
    } else {
      ref_kind = ReferenceKind::Heuristic;
      r_star = local_search(s, default_local_search_init(s)).reward.reward;
    }
  } catch (const std::exception &e) {
    out.failures.push_back(id + ": reference failed: " + e.what());
    return out;
  }

  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    const auto &m = spec.methods[mi];
    const auto t0 = Clock::now();
    try {
      double r = 0.0;
      switch (m.kind) {
      case MethodSpec::Kind::Exhaustive:
        r = exhaustive(s, {spec.exact_budget, 1}).reward.reward;
        break;
      case MethodSpec::Kind::LocalSearch:
        r = local_search(s, default_local_search_init(s)).reward.reward;
        break;
      case MethodSpec::Kind::RandomBest:
        r = random_best(s, m.k, mix_seed(task.seed, static_cast<std::uint64_t>(task.size))).reward.reward;
        break;
      case MethodSpec::Kind::Policy:
        if (!policies[mi])
          throw std::runtime_error("policy unavailable");
        r = best_of_samples(s, *policies[mi], m.k, mix_seed(task.seed, static_cast<std::uint64_t>(task.size))).reward;
        break;
      case MethodSpec::Kind::PolicyGreedy:
        if (!policies[mi])
          throw std::runtime_error("policy unavailable");
        r = rollout(s, *policies[mi], Sampling::greedy()).reward;
        break;
      default:
        throw ContractViolation("method is not defined for PCAP");
      }
      out.rows.push_back({task.size, task.seed, id, m.name, r, r_star, ref_kind, gap(r_star, r), seconds_since(t0)});
    } catch (const std::exception &e) {
      out.failures.push_back(id + " / " + m.name + ": " + e.what());
    }
  }
  return out;
}

TaskOutput run_tsp_task(const ExperimentSpec &spec, const Task &task,
                        const std::vector<std::shared_ptr<const Policy>> &policies) {
  TaskOutput out;
  const std::string id = "tsp-n" + std::to_string(task.size) + "-s" + std::to_string(task.seed);
  const TspInstance inst = generate_tsp(task.size, task.seed);
  double l_star = 0.0;
  ReferenceKind ref_kind = ReferenceKind::Exact;
  try {
    if (task.size <= kExactTourMaxNodes) {
      l_star = exact_tour(inst).length;
    } else {
      ref_kind = ReferenceKind::Heuristic;
      l_star = heuristic_tour(inst).length;
    }
  } catch (const std::exception &e) {
    out.failures.push_back(id + ": reference failed: " + e.what());
    return out;
  }
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    const auto &m = spec.methods[mi];
    const auto t0 = Clock::now();
    try {
      double len = 0.0;
      const std::uint64_t sample_seed = mix_seed(task.seed, static_cast<std::uint64_t>(task.size));
      switch (m.kind) {
      case MethodSpec::Kind::TspExact:
        len = exact_tour(inst).length;
        break;
      case MethodSpec::Kind::TspHeuristic:
        len = heuristic_tour(inst).length;
        break;
      case MethodSpec::Kind::RandomBest:
        len = random_tours(inst, m.k, sample_seed).length;
        break;
      case MethodSpec::Kind::Policy:
        if (!policies[mi])
          throw std::runtime_error("policy unavailable");
        len = best_of_samples(inst, *policies[mi], m.k, sample_seed).tour_length;
        break;
      case MethodSpec::Kind::PolicyGreedy:
        if (!policies[mi])
          throw std::runtime_error("policy unavailable");
        len = rollout(inst, *policies[mi], Sampling::greedy()).tour_length;
        break;
      default:
        throw ContractViolation("method is not defined for TSP");
      }
      out.rows.push_back(
          {task.size, task.seed, id, m.name, len, l_star, ref_kind, tour_gap(l_star, len), seconds_since(t0)});
    } catch (const std::exception &e) {
      out.failures.push_back(id + " / " + m.name + ": " + e.what());
    }
  }
  return out;
}

} // namespace

ExperimentResult run_experiment(const ExperimentSpec &spec) {
  spec.validate();
  ExperimentResult result;

  std::vector<std::shared_ptr<const Policy>> policies(spec.methods.size());
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    const auto &m = spec.methods[mi];
    if (!is_policy(m.kind))
      continue;
    try {
      if (!m.checkpoint.empty()) {
        policies[mi] = std::make_shared<const Policy>(Policy::load(m.checkpoint).snapshot());
      } else {
        policies[mi] = std::make_shared<const Policy>(train(*m.train).best_policy);
      }
    } catch (const std::exception &e) {
      result.failures.push_back(m.name + ": could not prepare policy: " + e.what());
    }
  }

  std::vector<Task> tasks;
  for (int size : spec.sizes)
    for (std::uint64_t seed : spec.seeds)
      tasks.push_back({size, seed});
  std::vector<TaskOutput> outputs(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++)
      outputs[i] = spec.env == EnvKind::Tsp ? run_tsp_task(spec, tasks[i], policies)
                                            : run_pcap_task(spec, tasks[i], policies);
  };
  {
    std::vector<std::jthread> pool;
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), tasks.size());
    for (std::size_t t = 1; t < n_threads; ++t)
      pool.emplace_back(worker);
    worker();
  }

  for (auto &o : outputs) {
    result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
    result.failures.insert(result.failures.end(), o.failures.begin(), o.failures.end());
  }
  for (const auto &m : spec.methods) {
    const bool any = std::any_of(result.rows.begin(), result.rows.end(),
                                 [&](const ResultRow &r) { return r.method == m.name; });
    if (!any)
      result.failed_methods.push_back(m.name);
  }
  if (!spec.out_dir.empty())
    write_experiment_outputs(spec, result, spec.out_dir);
  return result;
}

std::string results_csv(const std::vector<ResultRow> &rows) {
  std::ostringstream out;
  out << "size,seed,instance,method,reward,r_star,reference_kind,gap,wall_time_s\n";
  for (const auto &r : rows)
    out << r.size << ',' << r.seed << ',' << r.instance << ',' << r.method << ',' << fmt(r.reward) << ','
        << fmt(r.r_star) << ',' << to_string(r.reference) << ',' << fmt(r.gap) << ',' << fmt(r.wall_time_s) << '\n';
  return out.str();
}

namespace {

void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
}

std::string file_safe(std::string name) {
  for (char &c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
      c = '_';
  return name;
}

} // namespace

void write_experiment_outputs(const ExperimentSpec &spec, const ExperimentResult &result,
                              const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "results.csv", results_csv(result.rows));

  std::map<std::string, std::map<std::string, double>> by_method; // method -> instance -> reward
  json methods = json::object();
  for (const auto &m : spec.methods) {
    std::vector<ResultRow> rows;
    for (const auto &r : result.rows)
      if (r.method == m.name) {
        rows.push_back(r);
        by_method[m.name][r.instance] = r.reward;
      }
    write_text(dir / ("method_" + file_safe(m.name) + ".csv"), results_csv(rows));
    json per_size = json::object();
    double total = 0.0;
    for (int size : spec.sizes) {
      double sum = 0.0;
      int count = 0;
      for (const auto &r : rows)
        if (r.size == size) {
          sum += r.gap;
          ++count;
        }
      if (count > 0)
        per_size[std::to_string(size)] = {{"mean_gap", sum / count}, {"n", count}};
      total += sum;
    }
    methods[m.name] = {{"n", rows.size()},
                       {"mean_gap", rows.empty() ? json(nullptr) : json(total / static_cast<double>(rows.size()))},
                       {"per_size", per_size}};
  }

  std::ostringstream diff;
  diff << "method_a,method_b,mean,half_width,n\n";
  for (const auto &a : spec.methods)
    for (const auto &b : spec.methods) {
      if (a.name == b.name)
        continue;
      std::vector<double> ra;
      std::vector<double> rb;
      for (const auto &[instance, reward] : by_method[a.name]) {
        const auto it = by_method[b.name].find(instance);
        if (it == by_method[b.name].end())
          continue;
        ra.push_back(reward);
        rb.push_back(it->second);
      }
      if (ra.size() < 2)
        continue;
      const auto s = reward_difference(ra, rb);
      diff << a.name << ',' << b.name << ',' << fmt(s.mean) << ',' << fmt(s.half_width) << ',' << s.n << '\n';
    }
  write_text(dir / "reward_diff.csv", diff.str());

  write_json_file(dir / "summary.json", json{{"env", to_string(spec.env)},
                                             {"methods", methods},
                                             {"failures", result.failures},
                                             {"failed_methods", result.failed_methods}});
}

} // namespace rrm
