#include "unipath/path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "unipath/logprob.hpp"

namespace unipath {

namespace {

void check_layout(double t_start, double t_end, const std::vector<double>& times,
                  const std::vector<int>& states) {
  if (!(t_start <= t_end) || !std::isfinite(t_start) || !std::isfinite(t_end))
    throw std::invalid_argument("bad path interval");
  if (states.size() != times.size() + 1)
    throw std::invalid_argument("need exactly one state per segment");
  for (int s : states)
    if (s < 0) throw std::invalid_argument("states must be nonnegative");
  double prev = t_start;
  for (double t : times) {
    if (!std::isfinite(t)) throw std::invalid_argument("jump times must be finite");
    if (!(t > prev))
      throw std::invalid_argument("jump times must be strictly increasing inside the interval");
    prev = t;
  }
  if (!times.empty() && !(times.back() < t_end))
    throw std::invalid_argument("jump times must be strictly increasing inside the interval");
}

}  // namespace

namespace detail {

int segment_index(std::span<const double> jump_times, double t_start, double t_end, double t) {
  if (t < t_start || t > t_end) throw std::domain_error("time outside the path interval");
  return static_cast<int>(std::upper_bound(jump_times.begin(), jump_times.end(), t) -
                          jump_times.begin());
}

}  // namespace detail

MjpPath::MjpPath(double t_start, double t_end, std::vector<double> jump_times,
                 std::vector<int> states)
    : t_start_(t_start), t_end_(t_end), times_(std::move(jump_times)),
      states_(std::move(states)) {
  check_layout(t_start_, t_end_, times_, states_);
  for (std::size_t i = 1; i < states_.size(); ++i)
    if (states_[i] == states_[i - 1])
      throw std::invalid_argument("consecutive states must differ (no virtual jumps)");
}

MjpPath MjpPath::constant(double t_start, double t_end, int state) {
  return MjpPath(t_start, t_end, {}, {state});
}

int MjpPath::state_at(double t) const {
  return states_[detail::segment_index(times_, t_start_, t_end_, t)];
}

UniformizedPath::UniformizedPath(double t_start, double t_end, std::vector<double> times,
                                 std::vector<int> states, double omega)
    : t_start_(t_start), t_end_(t_end), times_(std::move(times)),
      states_(std::move(states)), omega_(omega) {
  check_layout(t_start_, t_end_, times_, states_);
  if (!(omega_ >= 0.0) || !std::isfinite(omega_))
    throw std::invalid_argument("uniformization rate must be finite and nonnegative");
}

int UniformizedPath::state_at(double t) const {
  return states_[detail::segment_index(times_, t_start_, t_end_, t)];
}

double path_log_density(const Generator& a, const InitialDistribution& pi,
                        const MjpPath& path) {
  const int n = a.size();
  for (int s : path.states())
    if (s >= n) throw std::invalid_argument("path state outside generator dimension");

  double logp = log_or_zero(pi[path.states()[0]]);
  const auto times = path.jump_times();
  const auto states = path.states();
  double prev = path.t_start();
  for (int i = 0; i < path.jump_count(); ++i) {
    const double q = a.rate(states[i], states[i + 1]);
    logp += log_or_zero(q);
    logp -= a.leave_rate(states[i]) * (times[i] - prev);
    prev = times[i];
  }
  logp -= a.leave_rate(states.back()) * (path.t_end() - prev);
  return logp;
}

}  // namespace unipath
