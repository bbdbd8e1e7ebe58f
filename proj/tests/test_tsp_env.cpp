#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "rrm/encoder.hpp"
#include "rrm/errors.hpp"
#include "rrm/json_io.hpp"
#include "rrm/tsp_env.hpp"

using rrm::TspInstance;

namespace {

TspInstance unit_square() {
  Eigen::MatrixX2d c(4, 2);
  c << 0, 0, 1, 0, 1, 1, 0, 1;
  return TspInstance::from_coords(c);
}

} // namespace

TEST_SUITE("tsp_env") {

TEST_CASE("instances are deterministic with a symmetric zero-diagonal distance matrix") {
  const auto a = rrm::generate_tsp(10, 4);
  CHECK(a == rrm::generate_tsp(10, 4));
  CHECK(a.dist.diagonal().isZero(0.0));
  CHECK(a.dist == a.dist.transpose());
  CHECK((a.coords.array() >= 0.0).all());
  CHECK((a.coords.array() <= 1.0).all());
}

TEST_CASE("tour length examples") {
  const auto sq = unit_square();
  CHECK(rrm::tour_length(sq, {0, 1, 2, 3}) == doctest::Approx(4.0));
  CHECK(rrm::tour_length(sq, {3, 2, 1, 0}) == doctest::Approx(4.0));
  CHECK(rrm::tour_length(sq, {2, 3, 0, 1}) == doctest::Approx(4.0));
  CHECK(rrm::tour_length(sq, {0, 2, 1, 3}) == doctest::Approx(2.0 + 2.0 * std::sqrt(2.0)));
  CHECK_THROWS_AS(rrm::tour_length(sq, {0, 1, 1, 3}), rrm::ContractViolation);
  CHECK_THROWS_AS(rrm::tour_length(sq, {0, 1, 2}), rrm::ContractViolation);
}

TEST_CASE("Held-Karp equals permutation brute force") {
  for (int n = 3; n <= 8; ++n)
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto inst = rrm::generate_tsp(n, 100 * n + seed);
      const auto r = rrm::exact_tour(inst);
      CHECK(rrm::is_valid_tour(r.tour, n));
      CHECK(r.length == doctest::Approx(oracle::brute_force_tour(inst)).epsilon(1e-12));
      CHECK(r.length == doctest::Approx(rrm::tour_length(inst, r.tour)).epsilon(1e-12));
    }
  CHECK(rrm::exact_tour(unit_square()).length == doctest::Approx(4.0));
}

TEST_CASE("Held-Karp refuses large instances") {
  CHECK_THROWS_AS(rrm::exact_tour(rrm::generate_tsp(rrm::kExactTourMaxNodes + 1, 0)), rrm::SizeLimitError);
}

TEST_CASE("heuristic tours are valid, 2-opt optimal, and never beat the optimum") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = rrm::generate_tsp(10, seed);
    const auto h = rrm::heuristic_tour(inst);
    CHECK(rrm::is_valid_tour(h.tour, 10));
    CHECK(h.length >= rrm::exact_tour(inst).length - 1e-12);
    // No improving 2-opt move remains.
    for (int i = 0; i < 9; ++i)
      for (int j = i + 2; j < 10; ++j) {
        if (i == 0 && j == 9)
          continue;
        auto t = h.tour;
        std::reverse(t.begin() + i + 1, t.begin() + j + 1);
        CHECK(rrm::tour_length(inst, t) >= h.length - 1e-12);
      }
  }
}

TEST_CASE("tour gap") {
  CHECK(rrm::tour_gap(4.0, 5.0) == doctest::Approx(0.25));
  CHECK(rrm::tour_gap(4.0, 4.0) == 0.0);
  CHECK_THROWS_AS(rrm::tour_gap(0.0, 1.0), rrm::ContractViolation);
}

TEST_CASE("feature variants") {
  const auto inst = rrm::generate_tsp(6, 2);
  const rrm::PartialTour partial{{4, 1, 2}};
  const auto coords = rrm::tsp_features(inst, partial, rrm::FeatureVariant::coords());
  CHECK(coords.node.cols() == rrm::tsp_base_feature_width(rrm::FeatureVariant::coords()));
  CHECK(coords.node.leftCols(2) == inst.coords);
  CHECK(coords.node(4, 3) == 1.0); // first
  CHECK(coords.node(2, 4) == 1.0); // last
  CHECK(coords.node.col(2).sum() == 3.0);

  const auto blind = rrm::tsp_features(inst, partial, rrm::FeatureVariant::blind());
  const auto other = rrm::tsp_features(rrm::generate_tsp(6, 99), partial, rrm::FeatureVariant::blind());
  CHECK(blind.node == other.node);
  CHECK(blind.edge == other.edge);

  const auto aware = rrm::tsp_features(inst, partial, rrm::FeatureVariant::edge_aware());
  CHECK(aware.edge.diagonal().isZero(0.0));
  CHECK(aware.edge != other.edge);

  const Eigen::MatrixXd de = Eigen::MatrixXd::Ones(6, 3);
  const auto enc = rrm::tsp_features(inst, {}, rrm::FeatureVariant::distance_encoded(3), &de);
  CHECK(enc.node.cols() == rrm::tsp_base_feature_width(rrm::FeatureVariant::distance_encoded(3)) + 3);
  CHECK_THROWS_AS(rrm::tsp_features(inst, {}, rrm::FeatureVariant::distance_encoded(3)), rrm::ContractViolation);
}

TEST_CASE("json round trip") {
  const auto inst = rrm::generate_tsp(7, 3);
  const auto back = rrm::tsp_from_json(rrm::to_json(inst));
  CHECK(back == inst);
  CHECK(back.dist.isApprox(inst.dist, 1e-15));
}

} // TEST_SUITE
