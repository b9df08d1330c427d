#pragma once

#include <vector>

#include "unipath/generator.hpp"
#include "unipath/mjp_sampler.hpp"
#include "unipath/path.hpp"
#include "unipath/rng.hpp"
#include "unipath/stats.hpp"

// Exact and brute-force reference implementations used for validation.
// Deliberately independent of the uniformization machinery: no sampling
// code is shared with the Gibbs path, so agreement is evidence, not
// tautology. Validation-grade accuracy, not performance-grade.

namespace unipath {

// exp(A * t) by scaling-and-squaring with a truncated series; row-stochastic.
std::vector<std::vector<double>> transition_matrix(const Generator& a, double t);

struct GridPosterior {
  std::vector<double> times;
  std::vector<std::vector<double>> marginals;  // one distribution per time
};

// Smoothed state marginals at the query times: forward-backward over the
// union of observation and query times, propagating with matrix
// exponentials and multiplying observation likelihoods at their instants.
GridPosterior exact_posterior_marginals(const MjpProblem& problem,
                                        std::vector<double> query_times);

struct RejectionResult {
  MjpPath path;
  long long rejections = 0;
};

// Prior draws from a point mass at s_start until one ends in s_end.
RejectionResult rejection_sample_endpoint(const Generator& a, int s_start, int s_end,
                                          double t_start, double t_end, Rng& rng,
                                          long long max_attempts = 1000000);

// Expected posterior sufficient statistics by numerical integration of
// smoothed marginals on a fine grid: trapezoidal dwell times (O(h^2)),
// midpoint two-slice transition intensities (O(h)).
SufficientStats exact_sufficient_stats(const MjpProblem& problem, double grid_step);

}  // namespace unipath
