#ifndef RRM_METRICS_HPP
#define RRM_METRICS_HPP

#include <span>
#include <string>

namespace rrm {

enum class ReferenceKind { Exact, Heuristic };

std::string to_string(ReferenceKind kind);

/// (r_star - r_hat) / r_star. Throws ContractViolation unless r_star > 0.
double gap(double r_star, double r_hat);

struct GapRecord {
  std::string instance_id;
  ReferenceKind reference = ReferenceKind::Exact;
  double r_star = 0.0;
  double r_hat = 0.0;
  double gap = 0.0;
};

GapRecord make_gap_record(std::string instance_id, ReferenceKind reference, double r_star, double r_hat);

struct RewardDiffSummary {
  double mean = 0.0;
  double half_width = 0.0; ///< 1.96 * sample_std / sqrt(n)
  int n = 0;
};

/// Paired differences a_i - b_i. Throws ContractViolation on a length mismatch or fewer than 2 pairs.
RewardDiffSummary reward_difference(std::span<const double> a, std::span<const double> b);

} // namespace rrm

#endif // RRM_METRICS_HPP
