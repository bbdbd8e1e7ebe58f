#ifndef RRM_TSP_ENV_HPP
#define RRM_TSP_ENV_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rrm/features.hpp"

namespace rrm {

/// Euclidean TSP instance in the unit square.
struct TspInstance {
  Eigen::MatrixX2d coords;
  Eigen::MatrixXd dist;

  int n() const { return static_cast<int>(coords.rows()); }

  static TspInstance from_coords(Eigen::MatrixX2d coords);
  bool operator==(const TspInstance &other) const { return coords == other.coords; }
};

using Tour = std::vector<int>;

struct TourResult {
  Tour tour;
  double length = 0.0;
};

TspInstance generate_tsp(int n, std::uint64_t seed);

bool is_valid_tour(const Tour &tour, int n);
/// Closed tour length. Throws ContractViolation unless `tour` is a permutation of 0..n-1.
double tour_length(const TspInstance &inst, const Tour &tour);

inline constexpr int kExactTourMaxNodes = 13;

/// Held-Karp over subsets. Throws SizeLimitError above kExactTourMaxNodes.
TourResult exact_tour(const TspInstance &inst);

/// Nearest neighbour from node 0, then first-improvement 2-opt until no move shortens the tour.
TourResult heuristic_tour(const TspInstance &inst);

/// Tour so far in visiting order (empty before the first step).
struct PartialTour {
  std::vector<int> visited;
};

/// Affinity scale for EdgeAware edges; 0 selects the mean pairwise distance.
struct TspFeatureOptions {
  double affinity_scale = 0.0;
};

int tsp_base_feature_width(const FeatureVariant &v);

/// Node and edge features for a TSP learner. `de` must be given iff the variant is DistanceEncoded.
FeatureSet tsp_features(const TspInstance &inst, const PartialTour &partial, const FeatureVariant &v,
                        const Eigen::MatrixXd *de = nullptr, const TspFeatureOptions &opts = {});

/// Relative regret of `l_hat` against reference length `l_star`.
double tour_gap(double l_star, double l_hat);

} // namespace rrm

#endif // RRM_TSP_ENV_HPP
