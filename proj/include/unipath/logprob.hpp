#pragma once

#include <cmath>
#include <limits>

namespace unipath {

// Log-domain zero. Zero-probability paths are legitimate values during
// testing and scoring, never exceptions; -inf propagates through sums.
inline constexpr double log_zero = -std::numeric_limits<double>::infinity();

inline bool is_log_zero(double x) { return std::isinf(x) && x < 0.0; }

inline double log_or_zero(double p) { return p > 0.0 ? std::log(p) : log_zero; }

}  // namespace unipath
