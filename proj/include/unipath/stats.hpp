#pragma once

#include <span>
#include <vector>

#include "unipath/path.hpp"

namespace unipath {

// Dwell time per state and count per ordered transition pair. Counts are
// reals so the same shape holds single-path integers, posterior
// expectations, and running averages.
struct SufficientStats {
  int n = 0;
  std::vector<double> dwell;   // n
  std::vector<double> counts;  // n*n row-major, diagonal unused

  SufficientStats() = default;
  explicit SufficientStats(int n_states)
      : n(n_states), dwell(n_states, 0.0),
        counts(static_cast<std::size_t>(n_states) * n_states, 0.0) {}

  double count(int from, int to) const {
    return counts[static_cast<std::size_t>(from) * n + to];
  }
  double& count(int from, int to) {
    return counts[static_cast<std::size_t>(from) * n + to];
  }
  double total_dwell() const;
  double total_count() const;
};

SufficientStats sufficient_stats(const MjpPath& path, int n);

}  // namespace unipath
