#pragma once

#include <span>
#include <vector>

#include "unipath/generator.hpp"

namespace unipath {

namespace detail {
// Largest segment index whose start time is <= t (right-continuous lookup).
int segment_index(std::span<const double> jump_times, double t_start, double t_end, double t);
}  // namespace detail

// Piecewise-constant, right-continuous trajectory on [t_start, t_end]:
// jump times strictly inside the interval, one state per segment,
// consecutive states distinct.
class MjpPath {
 public:
  MjpPath(double t_start, double t_end, std::vector<double> jump_times,
          std::vector<int> states);
  static MjpPath constant(double t_start, double t_end, int state);

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double length() const { return t_end_ - t_start_; }
  int jump_count() const { return static_cast<int>(times_.size()); }
  std::span<const double> jump_times() const { return times_; }
  std::span<const int> states() const { return states_; }

  // State at time t; right-continuous, so state_at(jump time) is the
  // post-jump state. Throws std::domain_error outside [t_start, t_end].
  int state_at(double t) const;

 private:
  double t_start_, t_end_;
  std::vector<double> times_;
  std::vector<int> states_;
};

// Same layout as MjpPath but consecutive states may repeat (virtual jumps);
// carries the uniformization rate that produced it.
class UniformizedPath {
 public:
  UniformizedPath(double t_start, double t_end, std::vector<double> times,
                  std::vector<int> states, double omega);

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  double length() const { return t_end_ - t_start_; }
  double omega() const { return omega_; }
  int time_count() const { return static_cast<int>(times_.size()); }
  std::span<const double> times() const { return times_; }
  std::span<const int> states() const { return states_; }

  int state_at(double t) const;

 private:
  double t_start_, t_end_;
  std::vector<double> times_;
  std::vector<int> states_;
  double omega_;
};

// Log density of a path under generator + initial distribution: the initial
// weight, one log-rate factor per jump, and the survival integral. Returns
// log_zero for impossible jumps or zero initial mass.
double path_log_density(const Generator& a, const InitialDistribution& pi,
                        const MjpPath& path);

}  // namespace unipath
