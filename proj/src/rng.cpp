#include "unipath/rng.hpp"

#include <algorithm>
#include <cassert>

namespace unipath {

int sample_categorical(std::span<const double> weights, double total, double u) {
  assert(total > 0.0);
  const double target = u * total;
  double cum = 0.0;
  int last_positive = -1;
  for (int i = 0; i < static_cast<int>(weights.size()); ++i) {
    const double w = weights[i];
    if (w <= 0.0) continue;
    last_positive = i;
    cum += w;
    if (cum > target) return i;
  }
  // Rounding walked past the end; the last positive entry takes the draw.
  return last_positive;
}

std::vector<double> poisson_event_times(double rate, double a, double b, Rng& rng) {
  std::vector<double> times;
  const double len = b - a;
  if (rate <= 0.0 || len <= 0.0) return times;
  std::poisson_distribution<long long> count_dist(rate * len);
  const long long count = count_dist(rng);
  if (count <= 0) return times;
  times.resize(static_cast<std::size_t>(count));
  std::uniform_real_distribution<double> unif(a, b);
  bool distinct = false;
  while (!distinct) {
    for (auto& t : times) t = unif(rng);
    std::sort(times.begin(), times.end());
    distinct = std::adjacent_find(times.begin(), times.end()) == times.end();
  }
  return times;
}

}  // namespace unipath
