#include "unipath/observations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unipath {

ObservationSet::ObservationSet(int state_count, std::vector<Observation> observations,
                               LikelihoodModel model)
    : n_(state_count), obs_(std::move(observations)), model_(std::move(model)) {
  if (n_ < 1) throw std::invalid_argument("observation set needs a positive state count");
  if (!model_) throw std::invalid_argument("observation set needs a likelihood model");
  std::stable_sort(obs_.begin(), obs_.end(),
                   [](const Observation& a, const Observation& b) { return a.time < b.time; });
  for (const auto& o : obs_) {
    if (!std::isfinite(o.time) || !std::isfinite(o.value))
      throw std::invalid_argument("observation fields must be finite");
    bool some_positive = false;
    for (int s = 0; s < n_; ++s) {
      const double l = model_(s, o);
      if (!(l >= 0.0) || !std::isfinite(l))
        throw std::invalid_argument("likelihood values must be finite and nonnegative");
      some_positive = some_positive || l > 0.0;
    }
    if (!some_positive)
      throw std::invalid_argument("observation with zero likelihood under every state");
  }
}

double ObservationSet::likelihood(int state, const Observation& o) const {
  return model_(state, o);
}

LikelihoodModel noiseless_state_likelihood() {
  return [](int state, const Observation& o) {
    return state == static_cast<int>(o.value) ? 1.0 : 0.0;
  };
}

LikelihoodModel discrete_noise_likelihood(double eps, int n) {
  if (!(eps >= 0.0) || !(eps < 1.0)) throw std::invalid_argument("eps must be in [0, 1)");
  if (n < 2) throw std::invalid_argument("discrete noise needs at least 2 states");
  return [eps, n](int state, const Observation& o) {
    return state == static_cast<int>(o.value) ? 1.0 - eps : eps / (n - 1);
  };
}

}  // namespace unipath
