#include "rrm/tsp_env.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

#include "rrm/errors.hpp"

namespace rrm {

TspInstance TspInstance::from_coords(Eigen::MatrixX2d coords) {
  TspInstance inst;
  inst.coords = std::move(coords);
  const int n = inst.n();
  inst.dist = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      inst.dist(i, j) = inst.dist(j, i) = (inst.coords.row(i) - inst.coords.row(j)).norm();
  return inst;
}

TspInstance generate_tsp(int n, std::uint64_t seed) {
  if (n < 3)
    throw DomainError("generate_tsp: n must be >= 3");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixX2d coords(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x = unit(rng);
    coords(i, 0) = x;
    coords(i, 1) = unit(rng);
  }
  return TspInstance::from_coords(std::move(coords));
}

bool is_valid_tour(const Tour &tour, int n) {
  if (static_cast<int>(tour.size()) != n)
    return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int v : tour) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)])
      return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

double tour_length(const TspInstance &inst, const Tour &tour) {
  if (!is_valid_tour(tour, inst.n()))
    throw ContractViolation("tour is not a permutation of the instance's nodes");
  double total = 0.0;
  for (std::size_t i = 0; i < tour.size(); ++i)
    total += inst.dist(tour[i], tour[(i + 1) % tour.size()]);
  return total;
}

TourResult exact_tour(const TspInstance &inst) {
  const int n = inst.n();
  if (n > kExactTourMaxNodes)
    throw SizeLimitError("exact_tour supports at most " + std::to_string(kExactTourMaxNodes) +
                         " nodes; use heuristic_tour");
  if (n < 3)
    throw DomainError("exact_tour: n must be >= 3");

  // cost[mask][j]: shortest path from node 0 through `mask` (subset of 1..n-1, bit j-1) ending at j.
  const int m = n - 1;
  const std::size_t n_masks = std::size_t{1} << m;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n_masks * static_cast<std::size_t>(m), kInf);
  std::vector<int> parent(n_masks * static_cast<std::size_t>(m), -1);
  auto at = [m](std::size_t mask, int j) { return mask * static_cast<std::size_t>(m) + static_cast<std::size_t>(j); };

  for (int j = 0; j < m; ++j)
    cost[at(std::size_t{1} << j, j)] = inst.dist(0, j + 1);
  for (std::size_t mask = 1; mask < n_masks; ++mask) {
    for (int j = 0; j < m; ++j) {
      if (!(mask & (std::size_t{1} << j)))
        continue;
      const double base = cost[at(mask, j)];
      if (base == kInf)
        continue;
      for (int k = 0; k < m; ++k) {
        if (mask & (std::size_t{1} << k))
          continue;
        const std::size_t next = mask | (std::size_t{1} << k);
        const double c = base + inst.dist(j + 1, k + 1);
        if (c < cost[at(next, k)]) {
          cost[at(next, k)] = c;
          parent[at(next, k)] = j;
        }
      }
    }
  }

  const std::size_t full = n_masks - 1;
  double best = kInf;
  int last = -1;
  for (int j = 0; j < m; ++j) {
    const double c = cost[at(full, j)] + inst.dist(j + 1, 0);
    if (c < best) {
      best = c;
      last = j;
    }
  }

  Tour reversed;
  std::size_t mask = full;
  for (int j = last; j >= 0;) {
    reversed.push_back(j + 1);
    const int prev = parent[at(mask, j)];
    mask &= ~(std::size_t{1} << j);
    j = prev;
  }
  Tour tour{0};
  tour.insert(tour.end(), reversed.rbegin(), reversed.rend());
  return {tour, tour_length(inst, tour)};
}

TourResult heuristic_tour(const TspInstance &inst) {
  const int n = inst.n();
  if (n < 3)
    throw DomainError("heuristic_tour: n must be >= 3");

  Tour tour{0};
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  used[0] = true;
  for (int step = 1; step < n; ++step) {
    const int last = tour.back();
    int best = -1;
    for (int v = 0; v < n; ++v)
      if (!used[static_cast<std::size_t>(v)] && (best < 0 || inst.dist(last, v) < inst.dist(last, best)))
        best = v;
    used[static_cast<std::size_t>(best)] = true;
    tour.push_back(best);
  }

  // 2-opt: reverse tour[i+1..j] when it strictly shortens the tour.
  constexpr double kMinGain = 1e-12;
  for (bool improved = true; improved;) {
    improved = false;
    for (int i = 0; i < n - 1 && !improved; ++i) {
      for (int j = i + 2; j < n && !improved; ++j) {
        const int a = tour[static_cast<std::size_t>(i)];
        const int b = tour[static_cast<std::size_t>(i + 1)];
        const int c = tour[static_cast<std::size_t>(j)];
        const int d = tour[static_cast<std::size_t>((j + 1) % n)];
        if (a == d)
          continue;
        const double delta = inst.dist(a, c) + inst.dist(b, d) - inst.dist(a, b) - inst.dist(c, d);
        if (delta < -kMinGain) {
          std::reverse(tour.begin() + i + 1, tour.begin() + j + 1);
          improved = true;
        }
      }
    }
  }
  return {tour, tour_length(inst, tour)};
}

int tsp_base_feature_width(const FeatureVariant &v) {
  // Coords: x, y + visited, is_first, is_last. Otherwise a constant column replaces the coordinates.
  return v.kind == FeatureVariant::Kind::Coords ? 5 : 4;
}

FeatureSet tsp_features(const TspInstance &inst, const PartialTour &partial, const FeatureVariant &v,
                        const Eigen::MatrixXd *de, const TspFeatureOptions &opts) {
  if (v.is_distance_encoded() != (de != nullptr))
    throw ContractViolation("distance encoding must be supplied iff the variant is DistanceEncoded");
  const int n = inst.n();
  const bool coords = v.kind == FeatureVariant::Kind::Coords;
  const int flags = coords ? 2 : 1;

  FeatureSet f;
  f.node = Eigen::MatrixXd::Zero(n, tsp_base_feature_width(v));
  if (coords)
    f.node.leftCols(2) = inst.coords;
  else
    f.node.col(0).setOnes();
  for (int v_idx : partial.visited)
    f.node(v_idx, flags) = 1.0;
  if (!partial.visited.empty()) {
    f.node(partial.visited.front(), flags + 1) = 1.0;
    f.node(partial.visited.back(), flags + 2) = 1.0;
  }
  if (de)
    f.node = append_columns(f.node, *de);

  f.edge = Eigen::MatrixXd::Ones(n, n);
  if (v.edges_visible()) {
    double tau = opts.affinity_scale;
    if (tau <= 0.0)
      tau = inst.dist.sum() / (static_cast<double>(n) * (n - 1));
    f.edge = (-inst.dist.array() / tau).exp().matrix();
  }
  f.edge.diagonal().setZero();
  return f;
}

double tour_gap(double l_star, double l_hat) {
  if (!(l_star > 0.0))
    throw ContractViolation("tour_gap: reference length must be positive");
  return (l_hat - l_star) / l_star;
}

} // namespace rrm
