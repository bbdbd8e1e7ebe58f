#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rrm/errors.hpp"
#include "rrm/experiment.hpp"
#include "rrm/json_io.hpp"
#include "rrm/metrics.hpp"

namespace fs = std::filesystem;
using rrm::MethodSpec;

namespace {

std::vector<std::string> lines(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    out.push_back(line);
  return out;
}

/// CSV without its wall-time column, which is the one field allowed to vary between runs.
std::string without_wall_time(const std::string &csv) {
  std::string out;
  for (const auto &line : lines(csv))
    out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

rrm::ExperimentSpec small_spec() {
  rrm::ExperimentSpec spec;
  spec.sizes = {3, 4};
  spec.seeds = {0, 1, 2};
  for (const char *m : {"exhaustive", "local", "random:20"})
    spec.methods.push_back(rrm::method_from_json(m, rrm::EnvKind::Pcap));
  return spec;
}

} // namespace

TEST_SUITE("experiment") {

TEST_CASE("gap and paired difference formulas") {
  CHECK(rrm::gap(0.8, 0.6) == doctest::Approx(0.25));
  CHECK(rrm::gap(0.5, 0.5) == 0.0);
  CHECK_THROWS_AS(rrm::gap(0.0, 0.1), rrm::ContractViolation);
  const std::vector<double> a{0.3, 0.5, 0.9};
  const auto same = rrm::reward_difference(a, a);
  CHECK(same.mean == 0.0);
  CHECK(same.half_width == 0.0);
  CHECK(same.n == 3);
  const std::vector<double> b{0.1, 0.2, 0.4};
  const auto d = rrm::reward_difference(a, b);
  // differences 0.2, 0.3, 0.5: mean 1/3, sample std sqrt(7/300)
  CHECK(d.mean == doctest::Approx(1.0 / 3.0));
  CHECK(d.half_width == doctest::Approx(1.96 * std::sqrt(7.0 / 300.0) / std::sqrt(3.0)));
  CHECK_THROWS_AS(rrm::reward_difference(a, std::vector<double>{1.0, 2.0}), rrm::ContractViolation);
  CHECK_THROWS_AS(rrm::reward_difference(std::vector<double>{1.0}, std::vector<double>{1.0}), rrm::ContractViolation);
  const auto rec = rrm::make_gap_record("x", rrm::ReferenceKind::Heuristic, 0.8, 0.6);
  CHECK(rec.gap == doctest::Approx(0.25));
}

TEST_CASE("method parsing") {
  using Kind = MethodSpec::Kind;
  CHECK(rrm::method_from_json("exhaustive", rrm::EnvKind::Pcap).kind == Kind::Exhaustive);
  CHECK(rrm::method_from_json("local", rrm::EnvKind::Pcap).kind == Kind::LocalSearch);
  const auto r = rrm::method_from_json("random:7", rrm::EnvKind::Pcap);
  CHECK(r.kind == Kind::RandomBest);
  CHECK(r.k == 7);
  const auto p = rrm::method_from_json("policy:ckpt", rrm::EnvKind::Pcap, "/base");
  CHECK(p.kind == Kind::Policy);
  CHECK(p.checkpoint == fs::path("/base/ckpt"));
  CHECK(rrm::method_from_json("exact", rrm::EnvKind::Tsp).kind == Kind::TspExact);
  CHECK(rrm::method_from_json("heuristic", rrm::EnvKind::Tsp).kind == Kind::TspHeuristic);
  CHECK_THROWS_AS(rrm::method_from_json("annealing", rrm::EnvKind::Pcap), rrm::ConfigError);
  CHECK_THROWS_AS(rrm::method_from_json("random:0", rrm::EnvKind::Pcap), rrm::ConfigError);
  CHECK_THROWS_AS(rrm::method_from_json("exact", rrm::EnvKind::Pcap), rrm::ConfigError);
}

TEST_CASE("rows cover every combination with exact references") {
  const auto result = rrm::run_experiment(small_spec());
  CHECK(result.ok());
  REQUIRE(result.rows.size() == 2 * 3 * 3);
  for (const auto &row : result.rows) {
    CHECK(row.reference == rrm::ReferenceKind::Exact);
    CHECK(row.gap >= 0.0);
    CHECK(row.reward <= row.r_star);
    if (row.method == "exhaustive")
      CHECK(row.gap == 0.0);
  }
  const auto csv = lines(rrm::results_csv(result.rows));
  REQUIRE(csv.size() == 19);
  CHECK(csv[0] == "size,seed,instance,method,reward,r_star,reference_kind,gap,wall_time_s");
  for (const auto &line : csv)
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
}

TEST_CASE("results do not depend on the worker count") {
  auto spec = small_spec();
  spec.workers = 1;
  const auto one = rrm::results_csv(rrm::run_experiment(spec).rows);
  spec.workers = 4;
  const auto four = rrm::results_csv(rrm::run_experiment(spec).rows);
  CHECK(without_wall_time(one) == without_wall_time(four));
}

TEST_CASE("sizes beyond the exact budget fall back to a heuristic reference") {
  auto spec = small_spec();
  spec.sizes = {4};
  spec.exact_budget = 100;
  spec.methods.erase(spec.methods.begin());
  const auto result = rrm::run_experiment(spec);
  CHECK(result.ok());
  for (const auto &row : result.rows)
    CHECK(row.reference == rrm::ReferenceKind::Heuristic);
}

TEST_CASE("output files") {
  auto spec = small_spec();
  const auto dir = fs::temp_directory_path() / "rrm_unit" / "experiment";
  fs::remove_all(dir);
  spec.out_dir = dir;
  const auto result = rrm::run_experiment(spec);
  for (const char *f : {"results.csv", "method_exhaustive.csv", "method_local.csv", "reward_diff.csv", "summary.json"})
    CHECK(fs::exists(dir / f));
  std::ifstream in(dir / "results.csv");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str() == rrm::results_csv(result.rows));
  const auto summary = rrm::read_json_file(dir / "summary.json");
  CHECK(summary.is_object());
}

TEST_CASE("spec JSON parsing and validation") {
  const auto spec = rrm::experiment_spec_from_json(
      rrm::json{{"sizes", {4}}, {"seeds", {0, 1}}, {"methods", {"local", "random:5"}}, {"workers", 2}});
  CHECK(spec.sizes == std::vector<int>{4});
  CHECK(spec.methods.size() == 2);
  CHECK(spec.workers == 2);
  CHECK_THROWS_AS(rrm::experiment_spec_from_json(rrm::json{{"sizes", {4}}, {"methods", rrm::json::array()}}),
                  rrm::ConfigError);
  CHECK_THROWS_AS(rrm::experiment_spec_from_json(rrm::json{{"sizes", {1}}, {"methods", {"local"}}}), rrm::ConfigError);
}

TEST_CASE("TSP experiments use lengths and Held-Karp references") {
  rrm::ExperimentSpec spec;
  spec.env = rrm::EnvKind::Tsp;
  spec.sizes = {7};
  spec.seeds = {0, 1};
  spec.methods = {rrm::method_from_json("exact", rrm::EnvKind::Tsp), rrm::method_from_json("heuristic", rrm::EnvKind::Tsp)};
  const auto result = rrm::run_experiment(spec);
  CHECK(result.ok());
  REQUIRE(result.rows.size() == 4);
  for (const auto &row : result.rows) {
    CHECK(row.reward >= row.r_star - 1e-12);
    CHECK(row.gap >= -1e-12);
  }
}

} // TEST_SUITE
