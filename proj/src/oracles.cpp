#include "unipath/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "unipath/errors.hpp"

namespace unipath {

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix identity_matrix(int n) {
  Matrix m(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  const int n = static_cast<int>(a.size());
  Matrix out(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double v = a[i][k];
      if (v == 0.0) continue;
      for (int j = 0; j < n; ++j) out[i][j] += v * b[k][j];
    }
  return out;
}

double inf_norm(const Matrix& m) {
  double worst = 0.0;
  for (const auto& row : m) {
    double sum = 0.0;
    for (double v : row) sum += std::abs(v);
    worst = std::max(worst, sum);
  }
  return worst;
}

// row'(j) = sum_i row(i) * m(i, j)
std::vector<double> row_times(const std::vector<double>& row, const Matrix& m) {
  const int n = static_cast<int>(row.size());
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double v = row[i];
    if (v == 0.0) continue;
    for (int j = 0; j < n; ++j) out[j] += v * m[i][j];
  }
  return out;
}

// col'(i) = sum_j m(i, j) * col(j)
std::vector<double> times_col(const Matrix& m, const std::vector<double>& col) {
  const int n = static_cast<int>(col.size());
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += m[i][j] * col[j];
    out[i] = sum;
  }
  return out;
}

double normalize(std::vector<double>& v) {
  double sum = 0.0;
  for (double& x : v) {
    if (x < 0.0) x = 0.0;
    sum += x;
  }
  if (sum > 0.0)
    for (double& x : v) x /= sum;
  return sum;
}

// Observation likelihood vectors grouped at their exact times.
std::map<double, std::vector<double>> group_likelihoods(const MjpProblem& p) {
  std::map<double, std::vector<double>> at;
  const int n = p.generator.size();
  for (const auto& o : p.observations.all()) {
    auto [it, inserted] = at.try_emplace(o.time, std::vector<double>(n, 1.0));
    for (int s = 0; s < n; ++s) it->second[s] *= p.observations.likelihood(s, o);
  }
  return at;
}

struct ForwardBackward {
  std::vector<double> times;
  std::vector<std::vector<double>> alpha;  // filtered, includes likelihood at its time
  std::vector<std::vector<double>> beta;   // strictly-future evidence
  std::map<double, Matrix> step_cache;     // keyed by step length

  const Matrix& step(const Generator& a, double dt) {
    auto it = step_cache.find(dt);
    if (it == step_cache.end())
      it = step_cache.emplace(dt, transition_matrix(a, dt)).first;
    return it->second;
  }
};

// Exact discrete propagation over the given event times (assumed sorted
// unique, spanning [t_start, t_end]).
ForwardBackward run_forward_backward(const MjpProblem& p, std::vector<double> times) {
  const int n = p.generator.size();
  auto like_at = group_likelihoods(p);

  ForwardBackward fb;
  fb.times = std::move(times);
  const int count = static_cast<int>(fb.times.size());
  fb.alpha.resize(count);
  fb.beta.assign(count, std::vector<double>(n, 1.0));

  std::vector<double> cur(p.initial.weights().begin(), p.initial.weights().end());
  for (int j = 0; j < count; ++j) {
    if (j > 0) cur = row_times(cur, fb.step(p.generator, fb.times[j] - fb.times[j - 1]));
    if (auto it = like_at.find(fb.times[j]); it != like_at.end())
      for (int s = 0; s < n; ++s) cur[s] *= it->second[s];
    if (normalize(cur) <= 0.0)
      throw InconsistentEvidenceError("no state consistent with evidence", j);
    fb.alpha[j] = cur;
  }

  std::vector<double> back(n, 1.0);
  for (int j = count - 2; j >= 0; --j) {
    std::vector<double> lifted = fb.beta[j + 1];
    if (auto it = like_at.find(fb.times[j + 1]); it != like_at.end())
      for (int s = 0; s < n; ++s) lifted[s] *= it->second[s];
    fb.beta[j] = times_col(fb.step(p.generator, fb.times[j + 1] - fb.times[j]), lifted);
    normalize(fb.beta[j]);
  }
  return fb;
}

std::vector<double> smoothed(const ForwardBackward& fb, int j) {
  std::vector<double> m = fb.alpha[j];
  for (std::size_t s = 0; s < m.size(); ++s) m[s] *= fb.beta[j][s];
  normalize(m);
  return m;
}

}  // namespace

std::vector<std::vector<double>> transition_matrix(const Generator& a, double t) {
  if (t < 0.0) throw std::domain_error("negative duration");
  const int n = a.size();
  Matrix m(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    a.for_each_rate(i, [&](int j, double q) { m[i][j] = q * t; });
    m[i][i] = -a.leave_rate(i) * t;
  }

  // scaling and squaring with a truncated series
  int squarings = 0;
  double norm = inf_norm(m);
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (auto& row : m)
    for (double& v : row) v *= scale;

  Matrix result = identity_matrix(n);
  Matrix term = identity_matrix(n);
  for (int k = 1; k <= 40; ++k) {
    term = multiply(term, m);
    for (auto& row : term)
      for (double& v : row) v /= k;
    double largest = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        result[i][j] += term[i][j];
        largest = std::max(largest, std::abs(term[i][j]));
      }
    if (largest < 1e-17) break;
  }
  for (int s = 0; s < squarings; ++s) result = multiply(result, result);

  // clean up tiny negatives from cancellation
  for (auto& row : result)
    for (double& v : row)
      if (v < 0.0 && v > -1e-12) v = 0.0;
  return result;
}

GridPosterior exact_posterior_marginals(const MjpProblem& problem,
                                        std::vector<double> query_times) {
  for (double t : query_times)
    if (t < problem.t_start || t > problem.t_end)
      throw std::domain_error("query time outside the interval");

  std::vector<double> times{problem.t_start, problem.t_end};
  times.insert(times.end(), query_times.begin(), query_times.end());
  for (const auto& o : problem.observations.all()) times.push_back(o.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  ForwardBackward fb = run_forward_backward(problem, std::move(times));

  GridPosterior out;
  out.times = query_times;
  out.marginals.reserve(query_times.size());
  for (double t : query_times) {
    const auto it = std::lower_bound(fb.times.begin(), fb.times.end(), t);
    out.marginals.push_back(smoothed(fb, static_cast<int>(it - fb.times.begin())));
  }
  return out;
}

RejectionResult rejection_sample_endpoint(const Generator& a, int s_start, int s_end,
                                          double t_start, double t_end, Rng& rng,
                                          long long max_attempts) {
  if (s_start < 0 || s_start >= a.size() || s_end < 0 || s_end >= a.size())
    throw std::invalid_argument("endpoint state out of range");
  const auto p = transition_matrix(a, t_end - t_start);
  if (!(p[s_start][s_end] > 0.0))
    throw std::invalid_argument("endpoint pair unreachable");

  const InitialDistribution start = InitialDistribution::point_mass(a.size(), s_start);
  long long rejections = 0;
  for (long long attempt = 0; attempt < max_attempts; ++attempt) {
    MjpPath path = sample_prior_path(a, start, t_start, t_end, rng);
    if (path.states().back() == s_end) return {std::move(path), rejections};
    ++rejections;
  }
  throw BudgetExceededError("rejection sampler exceeded its attempt cap");
}

SufficientStats exact_sufficient_stats(const MjpProblem& problem, double grid_step) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const int n = problem.generator.size();

  std::vector<double> times;
  for (double t = problem.t_start; t < problem.t_end; t += grid_step) times.push_back(t);
  times.push_back(problem.t_end);
  for (const auto& o : problem.observations.all()) times.push_back(o.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  ForwardBackward fb = run_forward_backward(problem, std::move(times));
  auto like_at = group_likelihoods(problem);

  SufficientStats stats(n);
  std::vector<double> cur = smoothed(fb, 0);
  for (std::size_t j = 0; j + 1 < fb.times.size(); ++j) {
    const double dt = fb.times[j + 1] - fb.times[j];
    // trapezoidal dwell
    std::vector<double> next = smoothed(fb, static_cast<int>(j + 1));
    for (int s = 0; s < n; ++s) stats.dwell[s] += 0.5 * dt * (cur[s] + next[s]);

    // midpoint two-slice transition intensity
    const Matrix& half = fb.step(problem.generator, dt / 2.0);
    std::vector<double> alpha_mid = row_times(fb.alpha[j], half);
    std::vector<double> lifted = fb.beta[j + 1];
    if (auto it = like_at.find(fb.times[j + 1]); it != like_at.end())
      for (int s = 0; s < n; ++s) lifted[s] *= it->second[s];
    std::vector<double> beta_mid = times_col(half, lifted);
    double z = 0.0;
    for (int s = 0; s < n; ++s) z += alpha_mid[s] * beta_mid[s];
    if (z > 0.0) {
      for (int i = 0; i < n; ++i) {
        if (alpha_mid[i] == 0.0) continue;
        problem.generator.for_each_rate(i, [&](int j2, double q) {
          stats.count(i, j2) += dt * q * alpha_mid[i] * beta_mid[j2] / z;
        });
      }
    }
    cur = std::move(next);
  }
  return stats;
}

}  // namespace unipath
