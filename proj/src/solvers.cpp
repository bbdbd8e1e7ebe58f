#include "rrm/solvers.hpp"

#include <chrono>
#include <limits>
#include <random>
#include <string>
#include <thread>

namespace rrm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

RewardTable::RewardTable(const Scenario &s, RewardParams params)
    : scenario_(&s), params_(params), n_aps_(s.n_aps()), n_nodes_(s.n_nodes()) {
  const int n_power = s.config.n_power();
  const std::size_t size = static_cast<std::size_t>(n_power) * n_aps_ * n_nodes_;
  rx_db_.resize(size);
  rx_mw_.resize(size);
  for (int p = 0; p < n_power; ++p) {
    const double tx = s.config.power_levels_dbm[static_cast<std::size_t>(p)];
    for (int ap = 0; ap < n_aps_; ++ap)
      for (int node = 0; node < n_nodes_; ++node) {
        rx_db_[index(ap, p, node)] = tx - s.pathloss_db(ap, node);
        rx_mw_[index(ap, p, node)] = received_power_mw(tx, s.pathloss_db(ap, node));
      }
  }
}

RewardBreakdown RewardTable::evaluate(std::span<const ApAction> actions) const {
  thread_local std::vector<int> scratch;
  return detail::evaluate_reward(
      *scenario_, actions, [this](int ap, int p, int node) { return rx_db_[index(ap, p, node)]; },
      [this](int ap, int p, int node) { return rx_mw_[index(ap, p, node)]; }, params_, scratch);
}

std::uint64_t action_space_size(const ScenarioConfig &config) {
  const auto per_ap = static_cast<std::uint64_t>(config.actions_per_ap());
  std::uint64_t total = 1;
  for (int i = 0; i < config.n_aps; ++i) {
    if (total > std::numeric_limits<std::uint64_t>::max() / per_ap)
      return std::numeric_limits<std::uint64_t>::max();
    total *= per_ap;
  }
  return total;
}

std::vector<ApAction> decode_flat_index(std::uint64_t index, const ScenarioConfig &config) {
  const int n_channels = config.n_channels();
  const auto per_ap = static_cast<std::uint64_t>(config.actions_per_ap());
  std::vector<ApAction> actions(static_cast<std::size_t>(config.n_aps));
  for (int ap = config.n_aps - 1; ap >= 0; --ap) {
    const auto digit = static_cast<int>(index % per_ap);
    index /= per_ap;
    actions[static_cast<std::size_t>(ap)] = {digit / n_channels, digit % n_channels};
  }
  return actions;
}

namespace {

struct RangeBest {
  std::uint64_t index = 0;
  double reward = -1.0;
};

// Odometer over [lo, hi); strict comparison keeps the first (smallest) index on ties.
RangeBest scan_range(const RewardTable &table, const ScenarioConfig &config, std::uint64_t lo, std::uint64_t hi) {
  RangeBest best;
  if (lo >= hi)
    return best;
  const int n_power = config.n_power();
  const int n_channels = config.n_channels();
  auto actions = decode_flat_index(lo, config);
  for (std::uint64_t idx = lo; idx < hi; ++idx) {
    const double r = table(actions);
    if (r > best.reward) {
      best.reward = r;
      best.index = idx;
    }
    for (int ap = config.n_aps - 1; ap >= 0; --ap) {
      auto &a = actions[static_cast<std::size_t>(ap)];
      if (++a.channel < n_channels)
        break;
      a.channel = 0;
      if (++a.power < n_power)
        break;
      a.power = 0;
    }
  }
  return best;
}

} // namespace

SolveResult exhaustive(const Scenario &s, const ExhaustiveOptions &opts) {
  const auto start = Clock::now();
  const std::uint64_t total = action_space_size(s.config);
  if (total > opts.budget)
    throw SizeLimitError("exhaustive enumeration needs " + std::to_string(total) + " evaluations, budget is " +
                         std::to_string(opts.budget) + "; use local_search instead");

  const RewardTable table(s);
  const int workers = std::max(1, opts.workers);
  std::vector<RangeBest> partial(static_cast<std::size_t>(workers));
  auto bound = [&](int w) { return total / static_cast<std::uint64_t>(workers) * static_cast<std::uint64_t>(w) +
                                   std::min<std::uint64_t>(static_cast<std::uint64_t>(w), total % workers); };
  if (workers == 1) {
    partial[0] = scan_range(table, s.config, 0, total);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] { partial[static_cast<std::size_t>(w)] = scan_range(table, s.config, bound(w), bound(w + 1)); });
  }

  // Ranges are in increasing index order, so a strict comparison keeps the smallest index.
  RangeBest best;
  for (const auto &p : partial)
    if (p.reward > best.reward)
      best = p;

  SolveResult out;
  out.assignment = Assignment(decode_flat_index(best.index, s.config));
  out.reward = reward(s, out.assignment);
  out.evaluations = total;
  out.wall_time_s = seconds_since(start);
  return out;
}

Assignment default_local_search_init(const Scenario &s) {
  std::vector<ApAction> actions(static_cast<std::size_t>(s.n_aps()));
  for (int ap = 0; ap < s.n_aps(); ++ap)
    actions[static_cast<std::size_t>(ap)] = {0, ap % s.config.n_channels()};
  return Assignment(std::move(actions));
}

SolveResult local_search(const Scenario &s, const Assignment &init) {
  const auto start = Clock::now();
  const RewardTable table(s);
  auto current = init.actions();
  double current_reward = table(current);

  SolveResult out;
  out.trace.push_back(current_reward);
  out.evaluations = 1;
  const int n_aps = s.n_aps();
  const int n_power = s.config.n_power();

  for (;;) {
    ++out.iterations;
    // Each AP's direction is its best alternative level, whether or not that move helps on its own.
    std::vector<int> best_level(static_cast<std::size_t>(n_aps), -1);
    std::vector<double> best_reward(static_cast<std::size_t>(n_aps), -1.0);
    for (int ap = 0; ap < n_aps; ++ap) {
      auto &slot = current[static_cast<std::size_t>(ap)];
      const int original = slot.power;
      for (int level = 0; level < n_power; ++level) {
        if (level == original)
          continue;
        slot.power = level;
        const double r = table(current);
        ++out.evaluations;
        if (r > best_reward[static_cast<std::size_t>(ap)]) {
          best_reward[static_cast<std::size_t>(ap)] = r;
          best_level[static_cast<std::size_t>(ap)] = level;
        }
      }
      slot.power = original;
    }
    if (n_power < 2)
      break;

    // Candidate A: the single best per-AP move.
    int best_ap = 0;
    for (int ap = 1; ap < n_aps; ++ap)
      if (best_reward[static_cast<std::size_t>(ap)] > best_reward[static_cast<std::size_t>(best_ap)])
        best_ap = ap;
    const double single_reward = best_reward[static_cast<std::size_t>(best_ap)];

    // Candidate B: every AP moves in its own direction at once.
    auto simultaneous = current;
    for (int ap = 0; ap < n_aps; ++ap)
      simultaneous[static_cast<std::size_t>(ap)].power = best_level[static_cast<std::size_t>(ap)];
    const double simultaneous_reward = table(simultaneous);
    ++out.evaluations;

    if (std::max(single_reward, simultaneous_reward) <= current_reward)
      break;
    if (simultaneous_reward > single_reward) {
      current = std::move(simultaneous);
      current_reward = simultaneous_reward;
    } else {
      current[static_cast<std::size_t>(best_ap)].power = best_level[static_cast<std::size_t>(best_ap)];
      current_reward = single_reward;
    }
    out.trace.push_back(current_reward);
  }

  out.assignment = Assignment(std::move(current));
  out.reward = reward(s, out.assignment);
  out.wall_time_s = seconds_since(start);
  return out;
}

namespace {

Assignment uniform_assignment(const ScenarioConfig &config, std::mt19937_64 &rng) {
  std::uniform_int_distribution<int> power(0, config.n_power() - 1);
  std::uniform_int_distribution<int> channel(0, config.n_channels() - 1);
  std::vector<ApAction> actions(static_cast<std::size_t>(config.n_aps));
  for (auto &a : actions) {
    a.power = power(rng);
    a.channel = channel(rng);
  }
  return Assignment(std::move(actions));
}

} // namespace

SolveResult local_search_restarts(const Scenario &s, int restarts, std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  SolveResult best = local_search(s, default_local_search_init(s));
  std::uint64_t evaluations = best.evaluations;
  for (int r = 1; r < restarts; ++r) {
    auto candidate = local_search(s, uniform_assignment(s.config, rng));
    evaluations += candidate.evaluations;
    if (candidate.reward.reward > best.reward.reward)
      best = std::move(candidate);
  }
  best.evaluations = evaluations;
  best.wall_time_s = seconds_since(start);
  return best;
}

SolveResult random_best(const Scenario &s, int k, std::uint64_t seed) {
  if (k < 1)
    throw ContractViolation("random_best: k must be >= 1");
  const auto start = Clock::now();
  const RewardTable table(s);
  std::mt19937_64 rng(seed);
  Assignment best;
  double best_reward = -1.0;
  for (int i = 0; i < k; ++i) {
    auto candidate = uniform_assignment(s.config, rng);
    const double r = table(candidate.actions());
    if (r > best_reward) {
      best_reward = r;
      best = std::move(candidate);
    }
  }
  SolveResult out;
  out.assignment = std::move(best);
  out.reward = reward(s, out.assignment);
  out.evaluations = static_cast<std::uint64_t>(k);
  out.wall_time_s = seconds_since(start);
  return out;
}

} // namespace rrm
