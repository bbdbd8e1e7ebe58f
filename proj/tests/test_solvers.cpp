#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rrm/errors.hpp"
#include "rrm/solvers.hpp"

using rrm::ApAction;
using rrm::Assignment;
using rrm::ScenarioConfig;

namespace {

rrm::Scenario small(int n_aps, std::uint64_t seed) {
  return rrm::generate_scenario(ScenarioConfig::for_size(n_aps, seed));
}

std::vector<int> powers(const Assignment &a) {
  std::vector<int> out;
  for (const auto &x : a.actions())
    out.push_back(x.power);
  return out;
}

std::vector<int> channels(const Assignment &a) {
  std::vector<int> out;
  for (const auto &x : a.actions())
    out.push_back(x.channel);
  return out;
}

} // namespace

TEST_SUITE("solvers") {

TEST_CASE("exhaustive matches the odometer oracle") {
  for (int n : {2, 3, 4, 5})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = small(n, 17 * seed + n);
      const auto r = rrm::exhaustive(s);
      const auto o = oracle::enumerate(s);
      CHECK(powers(r.assignment) == o.power);
      CHECK(channels(r.assignment) == o.channel);
      CHECK(r.reward.reward == doctest::Approx(o.reward).epsilon(1e-12));
      CHECK(r.evaluations == rrm::action_space_size(s.config));
    }
}

TEST_CASE("two APs with 2x2 actions evaluate all 16 candidates") {
  auto cfg = ScenarioConfig::for_size(2, 5);
  const auto two = rrm::generate_scenario(cfg);
  CHECK(rrm::action_space_size(cfg) == 16);
  CHECK(rrm::exhaustive(two).evaluations == 16);
}

TEST_CASE("reward table is bit-identical to the reference reward") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = small(2 + trial % 7, rng());
    const rrm::RewardTable table(s);
    std::vector<ApAction> actions(static_cast<std::size_t>(s.n_aps()));
    for (auto &a : actions) {
      a.power = static_cast<int>(rng() % 2);
      a.channel = static_cast<int>(rng() % 2);
    }
    CHECK(table.evaluate(actions) == rrm::reward(s, Assignment(actions)));
  }
}

TEST_CASE("budget is enforced") {
  const auto s = small(6, 1);
  CHECK_THROWS_AS(rrm::exhaustive(s, {.budget = 1000}), rrm::SizeLimitError);
  CHECK_NOTHROW(rrm::exhaustive(s, {.budget = 4096}));
}

TEST_CASE("flat index decoding puts AP 0 first and power before channel") {
  ScenarioConfig cfg;
  cfg.n_aps = 3;
  CHECK(rrm::action_space_size(cfg) == 64);
  auto a = rrm::decode_flat_index(0, cfg);
  CHECK(a == std::vector<ApAction>(3, ApAction{0, 0}));
  a = rrm::decode_flat_index(1, cfg);
  CHECK(a[2] == ApAction{0, 1});
  a = rrm::decode_flat_index(2, cfg);
  CHECK(a[2] == ApAction{1, 0});
  a = rrm::decode_flat_index(4, cfg);
  CHECK(a[1] == ApAction{0, 1});
  CHECK(a[2] == ApAction{0, 0});
  a = rrm::decode_flat_index(16, cfg);
  CHECK(a[0] == ApAction{0, 1});
  CHECK(a[1] == ApAction{0, 0});
  a = rrm::decode_flat_index(63, cfg);
  CHECK(a == std::vector<ApAction>(3, ApAction{1, 1}));
}

TEST_CASE("action space size saturates") {
  ScenarioConfig cfg;
  cfg.n_aps = 100;
  CHECK(rrm::action_space_size(cfg) == UINT64_MAX);
}

TEST_CASE("property: exhaustive >= local search >= its init, exhaustive >= random") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto s = small(2 + static_cast<int>(seed % 5), seed + 300);
    const auto ex = rrm::exhaustive(s);
    const auto init = rrm::default_local_search_init(s);
    const auto ls = rrm::local_search(s, init);
    const auto rb = rrm::random_best(s, 100, seed);
    CHECK(ex.reward.reward >= ls.reward.reward);
    CHECK(ls.reward.reward >= rrm::reward(s, init).reward);
    CHECK(ex.reward.reward >= rb.reward.reward);
  }
}

TEST_CASE("local search keeps channels and its trace never decreases") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const auto s = small(3 + trial % 6, rng());
    std::vector<ApAction> init(static_cast<std::size_t>(s.n_aps()));
    for (auto &a : init) {
      a.power = static_cast<int>(rng() % 2);
      a.channel = static_cast<int>(rng() % 2);
    }
    const auto r = rrm::local_search(s, Assignment(init));
    CHECK(channels(r.assignment) == channels(Assignment(init)));
    REQUIRE_FALSE(r.trace.empty());
    CHECK(r.trace.front() == rrm::reward(s, Assignment(init)).reward);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
      CHECK(r.trace[i] > r.trace[i - 1]);
    CHECK(r.trace.back() == doctest::Approx(r.reward.reward).epsilon(1e-12));
  }
}

TEST_CASE("local search from a power-optimal init stops after one pass") {
  const auto s = small(4, 21);
  const auto first = rrm::local_search(s, rrm::default_local_search_init(s));
  const auto again = rrm::local_search(s, first.assignment);
  CHECK(again.assignment == first.assignment);
  CHECK(again.iterations == 1);
  CHECK(again.trace.size() == 1);
}

TEST_CASE("two APs: local search finds the best power pair for fixed channels") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = small(2, seed);
    for (int c0 = 0; c0 < 2; ++c0)
      for (int c1 = 0; c1 < 2; ++c1) {
        const Assignment init(std::vector<ApAction>{{0, c0}, {0, c1}});
        const auto r = rrm::local_search(s, init);
        CHECK(r.reward.reward == doctest::Approx(oracle::best_power_only(s, {c0, c1})).epsilon(1e-12));
      }
  }
}

TEST_CASE("random best is deterministic per seed and monotone in expectation") {
  const auto s = small(6, 2);
  CHECK(rrm::random_best(s, 50, 9).assignment == rrm::random_best(s, 50, 9).assignment);
  CHECK_THROWS_AS(rrm::random_best(s, 0, 1), rrm::ContractViolation);
  double one = 0.0;
  double hundred = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    one += rrm::random_best(s, 1, seed).reward.reward;
    hundred += rrm::random_best(s, 100, seed).reward.reward;
  }
  CHECK(hundred >= one);
}

TEST_CASE("random best covers a tiny action space") {
  // Two APs: 16 joint actions, 100 draws miss the optimum with probability (15/16)^100.
  const auto s = small(2, 3);
  CHECK(rrm::random_best(s, 100, 5).reward.reward == doctest::Approx(rrm::exhaustive(s).reward.reward));
}

TEST_CASE("exhaustive does not depend on the worker count") {
  const auto s = small(7, 12);
  const auto seq = rrm::exhaustive(s, {.workers = 1});
  for (int w : {2, 3, 8}) {
    const auto par = rrm::exhaustive(s, {.workers = w});
    CHECK(par.assignment == seq.assignment);
    CHECK(par.reward == seq.reward);
  }
}

TEST_CASE("restarts never do worse than a single run") {
  const auto s = small(6, 40);
  const auto single = rrm::local_search(s, rrm::default_local_search_init(s));
  CHECK(rrm::local_search_restarts(s, 5, 1).reward.reward >= single.reward.reward);
}

} // TEST_SUITE
