#include "unipath/mjp_sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "unipath/errors.hpp"
#include "unipath/ffbs.hpp"
#include "unipath/logprob.hpp"

namespace unipath {

MjpProblem::MjpProblem(Generator a, InitialDistribution pi, double start, double end,
                       ObservationSet obs, UniformizationPolicy pol)
    : generator(std::move(a)), initial(std::move(pi)), t_start(start), t_end(end),
      observations(std::move(obs)), policy(pol) {
  if (!(t_start < t_end)) throw std::invalid_argument("need t_start < t_end");
  if (initial.size() != generator.size())
    throw std::invalid_argument("initial distribution dimension mismatch");
  if (!observations.empty()) {
    if (observations.state_count() != generator.size())
      throw std::invalid_argument("observation state count mismatch");
    for (const auto& o : observations.all())
      if (o.time < t_start || o.time > t_end)
        throw std::invalid_argument("observation outside the interval");
  }
}

MjpPath sample_prior_path(const Generator& a, const InitialDistribution& pi,
                          double t_start, double t_end, Rng& rng) {
  if (!(t_start <= t_end)) throw std::invalid_argument("bad interval");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int state = pi.sample(unif(rng));
  std::vector<double> times;
  std::vector<int> states{state};
  double t = t_start;
  while (true) {
    const double leave = a.leave_rate(state);
    if (!(leave > 0.0)) break;  // absorbing: holds forever
    t += std::exponential_distribution<double>(leave)(rng);
    if (t >= t_end) break;
    state = a.sample_next_state(state, unif(rng));
    times.push_back(t);
    states.push_back(state);
  }
  return MjpPath(t_start, t_end, std::move(times), std::move(states));
}

UniformizedPath sample_uniformized_prior(const Generator& a, const InitialDistribution& pi,
                                         double t_start, double t_end, double omega,
                                         Rng& rng) {
  if (!(t_start <= t_end)) throw std::invalid_argument("bad interval");
  const TransitionKernel kernel = build_kernel(a, omega);  // validates omega
  std::vector<double> grid = poisson_event_times(omega, t_start, t_end, rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> states(grid.size() + 1);
  states[0] = pi.sample(unif(rng));
  for (std::size_t i = 0; i < grid.size(); ++i)
    states[i + 1] = kernel.sample_row(states[i], unif(rng));
  return UniformizedPath(t_start, t_end, std::move(grid), std::move(states), omega);
}

MjpPath drop_virtual(const UniformizedPath& u) {
  std::vector<double> times;
  std::vector<int> states{u.states()[0]};
  for (int i = 0; i < u.time_count(); ++i) {
    if (u.states()[i + 1] != u.states()[i]) {
      times.push_back(u.times()[i]);
      states.push_back(u.states()[i + 1]);
    }
  }
  return MjpPath(u.t_start(), u.t_end(), std::move(times), std::move(states));
}

std::vector<double> sample_virtual_jumps(const Generator& a, const MjpPath& path,
                                         double omega, Rng& rng) {
  if (omega < a.max_leave_rate())
    throw InvalidPolicyError("uniformization rate below max leave rate");
  std::vector<double> virt;
  const auto times = path.jump_times();
  const auto states = path.states();
  double seg_start = path.t_start();
  for (int i = 0; i <= path.jump_count(); ++i) {
    const double seg_end = i < path.jump_count() ? times[i] : path.t_end();
    const double rate = std::max(0.0, omega - a.leave_rate(states[i]));
    auto events = poisson_event_times(rate, seg_start, seg_end, rng);
    virt.insert(virt.end(), events.begin(), events.end());
    seg_start = seg_end;
  }
  return virt;
}

UniformizedPath merge_virtual(const MjpPath& path, std::span<const double> virtual_times,
                              double omega) {
  std::vector<double> merged(path.jump_times().begin(), path.jump_times().end());
  merged.insert(merged.end(), virtual_times.begin(), virtual_times.end());
  std::sort(merged.begin(), merged.end());
  if (std::adjacent_find(merged.begin(), merged.end()) != merged.end())
    throw std::invalid_argument("coincident jump and virtual-jump times");
  std::vector<int> states(merged.size() + 1);
  states[0] = path.states()[0];
  for (std::size_t i = 0; i < merged.size(); ++i) states[i + 1] = path.state_at(merged[i]);
  return UniformizedPath(path.t_start(), path.t_end(), std::move(merged),
                         std::move(states), omega);
}

double log_density_virtual_jumps(const Generator& a, const MjpPath& path,
                                 std::span<const double> virtual_times, double omega) {
  if (omega < a.max_leave_rate())
    throw InvalidPolicyError("uniformization rate below max leave rate");
  const auto times = path.jump_times();
  const auto states = path.states();
  double logp = 0.0;
  double seg_start = path.t_start();
  std::size_t v = 0;
  for (int i = 0; i <= path.jump_count(); ++i) {
    const double seg_end = i < path.jump_count() ? times[i] : path.t_end();
    const double rate = omega - a.leave_rate(states[i]);
    int count = 0;
    while (v < virtual_times.size() && virtual_times[v] < seg_end) {
      if (virtual_times[v] < seg_start)
        throw std::invalid_argument("virtual times must be sorted within the interval");
      ++count;
      ++v;
    }
    if (count > 0) logp += count * log_or_zero(rate);
    logp -= std::max(0.0, rate) * (seg_end - seg_start);
    seg_start = seg_end;
  }
  if (v != virtual_times.size())
    throw std::invalid_argument("virtual times must lie inside the interval");
  return logp;
}

double log_density_uniformized(const Generator& a, const InitialDistribution& pi,
                               const UniformizedPath& u) {
  const double omega = u.omega();
  if (omega < a.max_leave_rate())
    throw InvalidPolicyError("uniformization rate below max leave rate");
  const auto states = u.states();
  double logp = -omega * u.length() + u.time_count() * std::log(omega);
  logp += log_or_zero(pi[states[0]]);
  for (int i = 0; i < u.time_count(); ++i) {
    const int from = states[i], to = states[i + 1];
    const double step =
        from == to ? omega - a.leave_rate(from) : a.rate(from, to);
    logp += log_or_zero(step) - std::log(omega);
  }
  return logp;
}

MjpPath gibbs_step(const MjpProblem& problem, const MjpPath& current, Rng& rng,
                   GibbsInfo* info, const TransitionKernel* prebuilt) {
  const Generator& a = problem.generator;
  const int n = a.size();
  const double omega = problem.policy.omega_for(a);

  const auto virt = sample_virtual_jumps(a, current, omega, rng);
  UniformizedPath uni = merge_virtual(current, virt, omega);
  const auto grid = uni.times();
  const int slots = uni.time_count() + 1;

  std::optional<TransitionKernel> local;
  if (!prebuilt) local.emplace(build_kernel(a, omega));
  const TransitionKernel* kernel = prebuilt ? prebuilt : &*local;

  HmmProblem hp;
  hp.state_count = n;
  hp.initial.assign(problem.initial.weights().begin(), problem.initial.weights().end());
  hp.kernels.assign(slots - 1, kernel);
  hp.likelihoods.resize(slots);

  // Slot i covers [g_i, g_{i+1}); the final slot closes at t_end.
  for (const auto& o : problem.observations.all()) {
    const int slot = static_cast<int>(
        std::upper_bound(grid.begin(), grid.end(), o.time) - grid.begin());
    auto& like = hp.likelihoods[slot];
    if (like.empty()) like.assign(n, 1.0);
    for (int s = 0; s < n; ++s) like[s] *= problem.observations.likelihood(s, o);
  }

  const ForwardResult fwd = forward_filter(hp);
  std::vector<int> resampled = backward_sample(hp, fwd, rng);

  if (info) {
    info->grid_size = uni.time_count();
    info->log_evidence = fwd.log_evidence;
  }
  return drop_virtual(UniformizedPath(problem.t_start, problem.t_end,
                                      std::vector<double>(grid.begin(), grid.end()),
                                      std::move(resampled), omega));
}

MjpPath forced_consistent_path(const MjpProblem& problem) {
  const int n = problem.generator.size();
  std::vector<double> times;
  std::vector<int> states;
  int prev_state = -1;
  double prev_time = problem.t_start;
  for (const auto& o : problem.observations.all()) {
    int best = 0;
    double best_like = -1.0;
    for (int s = 0; s < n; ++s) {
      const double l = problem.observations.likelihood(s, o);
      if (l > best_like) {
        best_like = l;
        best = s;
      }
    }
    if (states.empty()) {
      states.push_back(best);  // hold the first observed state from t_start
      prev_state = best;
      continue;
    }
    if (best == prev_state) continue;
    // jump right at the observation time (or just inside the interval)
    double jump = std::max(o.time, prev_time + (problem.t_end - problem.t_start) * 1e-12);
    if (jump >= problem.t_end || jump <= prev_time) continue;
    times.push_back(jump);
    states.push_back(best);
    prev_state = best;
    prev_time = jump;
  }
  if (states.empty()) states.push_back(0);
  return MjpPath(problem.t_start, problem.t_end, std::move(times), std::move(states));
}

void run_chain_stream(const MjpProblem& problem, int iterations, int burn_in, Rng& rng,
                      const std::function<void(const MjpPath&, const GibbsInfo&, int)>& on_iteration,
                      int init_retries) {
  if (burn_in < 0 || iterations <= burn_in)
    throw std::invalid_argument("need iterations > burn_in >= 0");

  const TransitionKernel kernel =
      build_kernel(problem.generator, problem.policy.omega_for(problem.generator));
  MjpPath current = sample_prior_path(problem.generator, problem.initial,
                                      problem.t_start, problem.t_end, rng);
  int attempts = 1;
  GibbsInfo inf;
  for (int iter = 0; iter < iterations; ++iter) {
    while (true) {
      try {
        current = gibbs_step(problem, current, rng, &inf, &kernel);
        break;
      } catch (const InconsistentEvidenceError&) {
        // Only the very first step may fail: later grids refine earlier ones
        // that already carried positive probability.
        if (iter > 0 || attempts > init_retries) throw;
        current = attempts == init_retries
                      ? forced_consistent_path(problem)
                      : sample_prior_path(problem.generator, problem.initial,
                                          problem.t_start, problem.t_end, rng);
        ++attempts;
      }
    }
    on_iteration(current, inf, iter);
  }
}

ChainResult run_chain(const MjpProblem& problem, int iterations, int burn_in, Rng& rng,
                      bool keep_paths, int init_retries) {
  ChainResult result;
  const int n = problem.generator.size();
  auto last = std::chrono::steady_clock::now();
  run_chain_stream(
      problem, iterations, burn_in, rng,
      [&](const MjpPath& path, const GibbsInfo& info, int iter) {
        const auto now = std::chrono::steady_clock::now();
        if (iter >= burn_in) {
          result.samples.push_back(sufficient_stats(path, n));
          if (keep_paths) result.paths.push_back(path);
        }
        result.grid_sizes.push_back(info.grid_size);
        result.log_evidences.push_back(info.log_evidence);
        result.seconds.push_back(std::chrono::duration<double>(now - last).count());
        last = now;
      },
      init_retries);
  return result;
}

}  // namespace unipath
