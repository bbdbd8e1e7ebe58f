// Independent reference implementations. They follow the formulas directly and
// share no code with the library beyond the data types.
#ifndef RRM_TESTS_ORACLES_HPP
#define RRM_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rrm/pcap_env.hpp"
#include "rrm/scenario.hpp"
#include "rrm/tsp_env.hpp"

namespace oracle {

struct Reward {
  double coverage;
  double interference;
  double load_imbalance;
  double reward;
};

inline double mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

/// Received-power tables so the enumerator below stays fast enough for 4^9 spaces.
struct Tables {
  // [ap][power][node]
  std::vector<std::vector<std::vector<double>>> db;
  std::vector<std::vector<std::vector<double>>> lin;

  explicit Tables(const rrm::Scenario &s) {
    const int n_aps = s.n_aps();
    const int n_p = s.config.n_power();
    db.assign(n_aps, std::vector<std::vector<double>>(n_p, std::vector<double>(s.n_nodes())));
    lin = db;
    for (int ap = 0; ap < n_aps; ++ap)
      for (int p = 0; p < n_p; ++p)
        for (int node = 0; node < s.n_nodes(); ++node) {
          db[ap][p][node] = s.config.power_levels_dbm[p] - s.pathloss_db(ap, node);
          lin[ap][p][node] = mw(db[ap][p][node]);
        }
  }
};

/// power[i], channel[i] per AP.
inline Reward reward(const rrm::Scenario &s, const Tables &t, const std::vector<int> &power,
                     const std::vector<int> &channel) {
  const int n_aps = s.n_aps();
  const int n_stas = s.n_stas();
  const double noise = mw(s.config.noise_floor_dbm);

  std::vector<int> serving(n_stas);
  double coverage = 0.0;
  for (int k = 0; k < n_stas; ++k) {
    const int node = n_aps + k;
    int best = 0;
    for (int ap = 1; ap < n_aps; ++ap)
      if (t.db[ap][power[ap]][node] > t.db[best][power[best]][node])
        best = ap;
    serving[k] = best;
    double interference = 0.0;
    for (int ap = 0; ap < n_aps; ++ap)
      if (ap != best && channel[ap] == channel[best])
        interference += t.lin[ap][power[ap]][node];
    const double sinr_db = 10.0 * std::log10(t.lin[best][power[best]][node] / (noise + interference));
    coverage += std::min(1.0, std::max(0.0, sinr_db / 20.0));
  }
  coverage /= n_stas;

  double interference = 0.0;
  for (int ap = 0; ap < n_aps; ++ap) {
    double received = 0.0;
    for (int other = 0; other < n_aps; ++other)
      if (other != ap && channel[other] == channel[ap])
        received += t.lin[other][power[other]][ap];
    interference += std::log10(1.0 + received / 1e-6);
  }
  interference /= n_aps;

  std::vector<double> load(n_aps, 0.0);
  for (int k = 0; k < n_stas; ++k)
    load[serving[k]] += s.demands(k);
  double mean = 0.0;
  for (double l : load)
    mean += l;
  mean /= n_aps;
  double var = 0.0;
  for (double l : load)
    var += (l - mean) * (l - mean);
  var /= n_aps;
  const double imbalance = std::sqrt(var) / (mean + 1e-6);

  return {coverage, interference, imbalance,
          std::max(coverage, 1e-3) / ((1.0 + interference) * (1.0 + imbalance))};
}

struct Best {
  std::vector<int> power;
  std::vector<int> channel;
  double reward = -1.0;
};

/// Plain odometer over all assignments, AP 0 most significant, power before channel.
/// Strict improvement keeps the lexicographically first maximiser.
inline Best enumerate(const rrm::Scenario &s) {
  const Tables t(s);
  const int n = s.n_aps();
  const int n_p = s.config.n_power();
  const int n_c = s.config.n_channels();
  std::vector<int> digit(n, 0); // digit = power * n_c + channel
  std::vector<int> power(n, 0);
  std::vector<int> channel(n, 0);
  Best best;
  while (true) {
    for (int i = 0; i < n; ++i) {
      power[i] = digit[i] / n_c;
      channel[i] = digit[i] % n_c;
    }
    const double r = reward(s, t, power, channel).reward;
    if (r > best.reward) {
      best = {power, channel, r};
    }
    int pos = n - 1;
    while (pos >= 0 && ++digit[pos] == n_p * n_c) {
      digit[pos] = 0;
      --pos;
    }
    if (pos < 0)
      break;
  }
  return best;
}

/// Best power vector with channels held fixed.
inline double best_power_only(const rrm::Scenario &s, const std::vector<int> &channel) {
  const Tables t(s);
  const int n = s.n_aps();
  const int n_p = s.config.n_power();
  std::vector<int> power(n, 0);
  double best = -1.0;
  while (true) {
    best = std::max(best, reward(s, t, power, channel).reward);
    int pos = n - 1;
    while (pos >= 0 && ++power[pos] == n_p) {
      power[pos] = 0;
      --pos;
    }
    if (pos < 0)
      break;
  }
  return best;
}

/// Shortest closed tour by trying every permutation that starts at node 0.
inline double brute_force_tour(const rrm::TspInstance &inst) {
  std::vector<int> perm(inst.n());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double len = 0.0;
    for (int i = 0; i < inst.n(); ++i) {
      const int a = perm[i];
      const int b = perm[(i + 1) % inst.n()];
      len += std::hypot(inst.coords(a, 0) - inst.coords(b, 0), inst.coords(a, 1) - inst.coords(b, 1));
    }
    best = std::min(best, len);
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  return best;
}

inline Eigen::MatrixXd floyd_warshall(Eigen::MatrixXd d) {
  const auto n = d.rows();
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return d;
}

} // namespace oracle

#endif // RRM_TESTS_ORACLES_HPP
