#include "unipath/stats.hpp"

#include <numeric>
#include <stdexcept>

namespace unipath {

double SufficientStats::total_dwell() const {
  return std::accumulate(dwell.begin(), dwell.end(), 0.0);
}

double SufficientStats::total_count() const {
  return std::accumulate(counts.begin(), counts.end(), 0.0);
}

SufficientStats sufficient_stats(const MjpPath& path, int n) {
  for (int s : path.states())
    if (s >= n) throw std::invalid_argument("path state outside requested dimension");
  SufficientStats st(n);
  const auto times = path.jump_times();
  const auto states = path.states();
  double prev = path.t_start();
  for (int i = 0; i < path.jump_count(); ++i) {
    st.dwell[states[i]] += times[i] - prev;
    st.count(states[i], states[i + 1]) += 1.0;
    prev = times[i];
  }
  st.dwell[states.back()] += path.t_end() - prev;
  return st;
}

}  // namespace unipath
