#ifndef RRM_DIAGNOSTICS_HPP
#define RRM_DIAGNOSTICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rrm/tensor.hpp"

namespace rrm {

struct GradCheckCase {
  std::string name;
  std::uint64_t seed = 0;
  ad::GradCheckReport report;
};

/// Names of every case in the suite: one per tensor op, the two encoder layer types,
/// the distance transform, and a full PCAP rollout log-probability.
std::vector<std::string> gradcheck_case_names();

/// Runs one named case on random inputs drawn from `seed`.
GradCheckCase run_gradcheck_case(const std::string &name, std::uint64_t seed, double tolerance = 1e-4);

/// Every case for seeds 0..n_seeds-1.
std::vector<GradCheckCase> run_gradcheck_suite(int n_seeds, double tolerance = 1e-4);

} // namespace rrm

#endif // RRM_DIAGNOSTICS_HPP
