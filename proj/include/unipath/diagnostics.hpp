#pragma once

#include <span>
#include <vector>

#include "unipath/stats.hpp"

namespace unipath {

using ScalarTrace = std::vector<double>;

struct EssResult {
  double value = 0.0;
  bool constant_trace = false;
};

// N / (1 + 2 sum of autocorrelations), truncated by the initial monotone
// positive sequence rule on paired lags; clamped to (0, N]. A zero-variance
// trace reports N with the constant flag set.
EssResult effective_sample_size(const ScalarTrace& trace);

struct AreResult {
  double value = 0.0;
  // Flat indices of truth entries equal to zero (dwell first, then counts
  // row-major), excluded from the sum.
  std::vector<int> excluded;
};

// Sum over statistics of |estimate - truth| / truth, skipping zero-truth
// entries. Throws when every truth entry is zero.
AreResult average_relative_error(const SufficientStats& estimate, const SufficientStats& truth);

struct AggregateResult {
  SufficientStats mean;
  std::vector<ScalarTrace> dwell_traces;   // n traces
  std::vector<ScalarTrace> count_traces;   // n*n traces, row-major
};

AggregateResult aggregate_stats(std::span<const SufficientStats> samples);

}  // namespace unipath
