#pragma once

#include <functional>
#include <span>
#include <vector>

#include "unipath/generator.hpp"
#include "unipath/observations.hpp"
#include "unipath/path.hpp"
#include "unipath/rng.hpp"
#include "unipath/stats.hpp"

namespace unipath {

// Posterior path inference target: generator, initial distribution,
// interval, observations, uniformization policy.
struct MjpProblem {
  Generator generator;
  InitialDistribution initial;
  double t_start;
  double t_end;
  ObservationSet observations;  // may be empty
  UniformizationPolicy policy;

  MjpProblem(Generator a, InitialDistribution pi, double start, double end,
             ObservationSet obs = {}, UniformizationPolicy pol = UniformizationPolicy());
};

// Forward simulation: initial state from pi, exponential holding times,
// next state proportional to off-diagonal rates. Absorbing states hold to
// the end of the interval.
MjpPath sample_prior_path(const Generator& a, const InitialDistribution& pi,
                          double t_start, double t_end, Rng& rng);

// Prior simulation through the subordinated chain: grid times from a
// homogeneous Poisson(omega) process, states by running the uniformized
// kernel across them. Self-jumps stay in the result.
UniformizedPath sample_uniformized_prior(const Generator& a, const InitialDistribution& pi,
                                         double t_start, double t_end, double omega,
                                         Rng& rng);

// Removes every grid time whose state repeats the previous one.
MjpPath drop_virtual(const UniformizedPath& u);

// Self-jump times given the current path: a piecewise-constant-intensity
// Poisson process with rate omega - leave_rate(state) on each segment.
std::vector<double> sample_virtual_jumps(const Generator& a, const MjpPath& path,
                                         double omega, Rng& rng);

// (path, virtual times) -> the uniformized characterization on the merged
// grid. Rejects exact time collisions.
UniformizedPath merge_virtual(const MjpPath& path, std::span<const double> virtual_times,
                              double omega);

// Log density of ordered virtual-jump times given the path (inhomogeneous
// Poisson with intensity omega - leave_rate(state)).
double log_density_virtual_jumps(const Generator& a, const MjpPath& path,
                                 std::span<const double> virtual_times, double omega);

// Log density of a uniformized path: ordered Poisson(omega) grid times the
// subordinated-chain probability.
double log_density_uniformized(const Generator& a, const InitialDistribution& pi,
                               const UniformizedPath& u);

struct GibbsInfo {
  int grid_size = 0;         // merged grid |W|
  double log_evidence = 0.0; // observation evidence given the grid
};

// One auxiliary-variable Gibbs transition: resample virtual jumps, run
// forward filtering-backward sampling on the merged grid with observation
// likelihoods aggregated per slot, drop virtual jumps. The output depends
// on the input path only through the merged grid times. A prebuilt kernel
// for the policy's omega may be supplied to avoid rebuilding per call.
MjpPath gibbs_step(const MjpProblem& problem, const MjpPath& current, Rng& rng,
                   GibbsInfo* info = nullptr, const TransitionKernel* prebuilt = nullptr);

// Deterministic observation-consistent fallback start: one jump just before
// each observation time into its maximum-likelihood state.
MjpPath forced_consistent_path(const MjpProblem& problem);

struct ChainResult {
  std::vector<SufficientStats> samples;  // retained iterations only
  std::vector<MjpPath> paths;            // retained, when requested
  std::vector<int> grid_sizes;           // every iteration
  std::vector<double> log_evidences;     // every iteration
  std::vector<double> seconds;           // every iteration
};

// Runs the chain and hands every iteration (including burn-in, so callers
// see the full trace) to the callback. Initialization is a prior draw; if
// the first step hits inconsistent evidence it retries fresh prior draws up
// to `init_retries`, then falls back to forced_consistent_path once.
void run_chain_stream(const MjpProblem& problem, int iterations, int burn_in, Rng& rng,
                      const std::function<void(const MjpPath&, const GibbsInfo&, int)>& on_iteration,
                      int init_retries = 32);

ChainResult run_chain(const MjpProblem& problem, int iterations, int burn_in, Rng& rng,
                      bool keep_paths = false, int init_retries = 32);

}  // namespace unipath
