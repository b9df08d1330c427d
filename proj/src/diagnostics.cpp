#include "unipath/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace unipath {

EssResult effective_sample_size(const ScalarTrace& trace) {
  const int n = static_cast<int>(trace.size());
  if (n < 10) throw std::invalid_argument("trace too short for an ESS estimate");

  double mean = 0.0;
  for (double x : trace) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : trace) var += (x - mean) * (x - mean);
  var /= n;
  if (var == 0.0) return {static_cast<double>(n), true};

  auto autocorr = [&](int lag) {
    double sum = 0.0;
    for (int t = 0; t + lag < n; ++t) sum += (trace[t] - mean) * (trace[t + lag] - mean);
    return sum / (n * var);
  };

  // Initial monotone positive sequence over paired autocorrelations.
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (int m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocorr(2 * m) + autocorr(2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau -= 1.0;  // the lag-0 term was counted twice
  tau = std::max(tau, 1e-12);
  const double ess = std::clamp(static_cast<double>(n) / tau, 1e-12,
                                static_cast<double>(n));
  return {ess, false};
}

AreResult average_relative_error(const SufficientStats& estimate, const SufficientStats& truth) {
  if (estimate.n != truth.n) throw std::invalid_argument("statistics shapes differ");
  AreResult out;
  int flat = 0;
  bool any_nonzero = false;
  auto accumulate = [&](double est, double tru) {
    if (tru == 0.0) {
      out.excluded.push_back(flat);
    } else {
      any_nonzero = true;
      out.value += std::abs(est - tru) / tru;
    }
    ++flat;
  };
  for (int i = 0; i < truth.n; ++i) accumulate(estimate.dwell[i], truth.dwell[i]);
  for (std::size_t i = 0; i < truth.counts.size(); ++i)
    accumulate(estimate.counts[i], truth.counts[i]);
  if (!any_nonzero) throw std::invalid_argument("all truth statistics are zero; metric undefined");
  return out;
}

AggregateResult aggregate_stats(std::span<const SufficientStats> samples) {
  if (samples.empty()) throw std::invalid_argument("no samples to aggregate");
  const int n = samples[0].n;
  AggregateResult out;
  out.mean = SufficientStats(n);
  out.dwell_traces.assign(n, ScalarTrace{});
  out.count_traces.assign(static_cast<std::size_t>(n) * n, ScalarTrace{});
  for (auto& t : out.dwell_traces) t.reserve(samples.size());
  for (auto& t : out.count_traces) t.reserve(samples.size());

  for (const auto& s : samples) {
    if (s.n != n) throw std::invalid_argument("statistics shapes differ");
    for (int i = 0; i < n; ++i) {
      out.mean.dwell[i] += s.dwell[i];
      out.dwell_traces[i].push_back(s.dwell[i]);
    }
    for (std::size_t i = 0; i < s.counts.size(); ++i) {
      out.mean.counts[i] += s.counts[i];
      out.count_traces[i].push_back(s.counts[i]);
    }
  }
  const double scale = 1.0 / static_cast<double>(samples.size());
  for (double& v : out.mean.dwell) v *= scale;
  for (double& v : out.mean.counts) v *= scale;
  return out;
}

}  // namespace unipath
