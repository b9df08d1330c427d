#pragma once

#include <functional>
#include <span>
#include <vector>

namespace unipath {

// A timestamped noisy reading. `value` is the payload (an observed state
// index, a count, ...); `channel` distinguishes payload kinds when one set
// mixes several (per-node channels in flattened models, noiseless-vs-noisy
// readings in the predator-prey study). Plain models ignore it.
struct Observation {
  double time = 0.0;
  double value = 0.0;
  int channel = 0;
};

using LikelihoodModel = std::function<double(int state, const Observation&)>;

// Observations plus the pluggable state-likelihood model that scores them.
// Times are kept sorted; every observation must admit at least one state
// with positive likelihood.
class ObservationSet {
 public:
  ObservationSet() = default;  // empty
  ObservationSet(int state_count, std::vector<Observation> observations,
                 LikelihoodModel model);

  int state_count() const { return n_; }
  bool empty() const { return obs_.empty(); }
  std::size_t size() const { return obs_.size(); }
  std::span<const Observation> all() const { return obs_; }
  double likelihood(int state, const Observation& o) const;
  const LikelihoodModel& model() const { return model_; }

 private:
  int n_ = 0;
  std::vector<Observation> obs_;
  LikelihoodModel model_;
};

// Payload is the observed state index; likelihood is the exact-match
// indicator.
LikelihoodModel noiseless_state_likelihood();

// Correct state observed with probability 1-eps, otherwise a uniform draw
// over the remaining states. Samplable, so usable in joint-distribution
// correctness tests.
LikelihoodModel discrete_noise_likelihood(double eps, int n);

}  // namespace unipath
