#include "rrm/metrics.hpp"

#include <cmath>

#include "rrm/errors.hpp"

namespace rrm {

std::string to_string(ReferenceKind kind) { return kind == ReferenceKind::Exact ? "exact" : "heuristic"; }

double gap(double r_star, double r_hat) {
  if (!(r_star > 0.0))
    throw ContractViolation("gap: reference reward must be positive");
  return (r_star - r_hat) / r_star;
}

GapRecord make_gap_record(std::string instance_id, ReferenceKind reference, double r_star, double r_hat) {
  return {std::move(instance_id), reference, r_star, r_hat, gap(r_star, r_hat)};
}

RewardDiffSummary reward_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ContractViolation("reward_difference: series lengths differ");
  if (a.size() < 2)
    throw ContractViolation("reward_difference: need at least two pairs");
  const auto n = static_cast<double>(a.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    mean += a[i] - b[i];
  mean /= n;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double sample_std = std::sqrt(ss / (n - 1.0));
  return {mean, 1.96 * sample_std / std::sqrt(n), static_cast<int>(a.size())};
}

} // namespace rrm
