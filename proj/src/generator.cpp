#include "unipath/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "unipath/errors.hpp"
#include "unipath/rng.hpp"

namespace unipath {

namespace {

void check_entry(int n, const RateEntry& e) {
  if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
    throw std::invalid_argument("rate entry out of range");
  if (e.from == e.to)
    throw std::invalid_argument("diagonal rate entries are derived, not given");
  if (!(e.rate >= 0.0) || !std::isfinite(e.rate))
    throw std::invalid_argument("rates must be finite and nonnegative");
}

}  // namespace

Generator Generator::dense(int n, std::span<const RateEntry> entries) {
  if (n < 1) throw std::invalid_argument("generator dimension must be positive");
  Generator g;
  g.n_ = n;
  g.sparse_ = false;
  g.dense_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (const auto& e : entries) {
    check_entry(n, e);
    double& cell = g.dense_[static_cast<std::size_t>(e.from) * n + e.to];
    if (cell != 0.0) throw std::invalid_argument("duplicate rate entry");
    cell = e.rate;
  }
  g.finalize();
  return g;
}

Generator Generator::dense_from_matrix(const std::vector<std::vector<double>>& rates) {
  const int n = static_cast<int>(rates.size());
  if (n < 1) throw std::invalid_argument("generator dimension must be positive");
  Generator g;
  g.n_ = n;
  g.sparse_ = false;
  g.dense_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rates[i].size()) != n)
      throw std::invalid_argument("generator matrix must be square");
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;  // diagonal is derived
      const double q = rates[i][j];
      if (!(q >= 0.0) || !std::isfinite(q))
        throw std::invalid_argument("rates must be finite and nonnegative");
      g.dense_[static_cast<std::size_t>(i) * n + j] = q;
    }
  }
  g.finalize();
  return g;
}

Generator Generator::sparse(int n, std::span<const RateEntry> entries) {
  if (n < 1) throw std::invalid_argument("generator dimension must be positive");
  Generator g;
  g.n_ = n;
  g.sparse_ = true;
  g.rows_.resize(n);
  for (const auto& e : entries) {
    check_entry(n, e);
    if (e.rate == 0.0) continue;  // keep sparse rows truly sparse
    g.rows_[e.from].emplace_back(e.to, e.rate);
  }
  for (auto& row : g.rows_) {
    std::sort(row.begin(), row.end());
    for (std::size_t i = 1; i < row.size(); ++i)
      if (row[i].first == row[i - 1].first)
        throw std::invalid_argument("duplicate rate entry");
  }
  g.finalize();
  return g;
}

void Generator::finalize() {
  leave_.assign(n_, 0.0);
  nnz_ = 0;
  if (sparse_) {
    for (int i = 0; i < n_; ++i) {
      double sum = 0.0;
      for (const auto& [to, q] : rows_[i]) sum += q;
      leave_[i] = sum;
      nnz_ += static_cast<long long>(rows_[i].size());
    }
  } else {
    for (int i = 0; i < n_; ++i) {
      double sum = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (j == i) continue;
        const double q = dense_[static_cast<std::size_t>(i) * n_ + j];
        sum += q;
        if (q > 0.0) ++nnz_;
      }
      leave_[i] = sum;
      dense_[static_cast<std::size_t>(i) * n_ + i] = -sum;
    }
  }
  max_leave_ = 0.0;
  for (double l : leave_) {
    if (!std::isfinite(l)) throw std::invalid_argument("leave rate must be finite");
    max_leave_ = std::max(max_leave_, l);
  }
}

double Generator::rate(int from, int to) const {
  if (from == to) return -leave_[from];
  if (!sparse_) return dense_[static_cast<std::size_t>(from) * n_ + to];
  const auto& row = rows_[from];
  auto it = std::lower_bound(row.begin(), row.end(), to,
                             [](const auto& p, int t) { return p.first < t; });
  return (it != row.end() && it->first == to) ? it->second : 0.0;
}

int Generator::sample_next_state(int from, double u) const {
  const double total = leave_[from];
  if (!(total > 0.0))
    throw std::logic_error("sample_next_state from an absorbing state");
  const double target = u * total;
  double cum = 0.0;
  int last = -1;
  if (sparse_) {
    for (const auto& [to, q] : rows_[from]) {
      last = to;
      cum += q;
      if (cum > target) return to;
    }
  } else {
    const double* row = dense_.data() + static_cast<std::size_t>(from) * n_;
    for (int j = 0; j < n_; ++j) {
      if (j == from || row[j] <= 0.0) continue;
      last = j;
      cum += row[j];
      if (cum > target) return j;
    }
  }
  return last;
}

InitialDistribution::InitialDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("empty initial distribution");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("initial weights must be finite and nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("initial weights must sum to 1");
}

InitialDistribution InitialDistribution::uniform(int n) {
  if (n < 1) throw std::invalid_argument("empty initial distribution");
  std::vector<double> w(n, 1.0 / n);
  // force an exact unit sum so the invariant holds for any n
  return normalized(std::move(w));
}

InitialDistribution InitialDistribution::point_mass(int n, int state) {
  if (state < 0 || state >= n) throw std::invalid_argument("point mass out of range");
  std::vector<double> w(n, 0.0);
  w[state] = 1.0;
  return InitialDistribution(std::move(w));
}

InitialDistribution InitialDistribution::normalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("initial weights must be finite and nonnegative");
    sum += w;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("cannot normalize zero weights");
  for (double& w : weights) w /= sum;
  // shave the normalization residue off the largest weight
  double resid = -1.0;
  std::size_t argmax = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total += weights[i];
    if (weights[i] > resid) {
      resid = weights[i];
      argmax = i;
    }
  }
  weights[argmax] += 1.0 - total;
  return InitialDistribution(std::move(weights));
}

int InitialDistribution::sample(double u) const {
  return sample_categorical(weights_, 1.0, u);
}

TransitionKernel TransitionKernel::identity(int n) {
  if (n < 1) throw std::invalid_argument("kernel dimension must be positive");
  TransitionKernel k;
  k.n_ = n;
  k.sparse_ = true;
  k.diag_.assign(n, 1.0);
  k.rows_.resize(n);
  k.cols_.resize(n);
  return k;
}

TransitionKernel TransitionKernel::from_matrix(const std::vector<std::vector<double>>& rows) {
  const int n = static_cast<int>(rows.size());
  if (n < 1) throw std::invalid_argument("kernel dimension must be positive");
  TransitionKernel k;
  k.n_ = n;
  k.sparse_ = false;
  k.dense_.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw std::invalid_argument("kernel matrix must be square");
    for (int j = 0; j < n; ++j) k.dense_[static_cast<std::size_t>(i) * n + j] = rows[i][j];
  }
  k.validate();
  return k;
}

void TransitionKernel::validate() const {
  for (int i = 0; i < n_; ++i) {
    double sum = sparse_ ? diag_[i] : 0.0;
    if (sparse_) {
      if (diag_[i] < 0.0) throw std::invalid_argument("kernel entries must be nonnegative");
      for (const auto& [j, w] : rows_[i]) {
        if (w < 0.0) throw std::invalid_argument("kernel entries must be nonnegative");
        sum += w;
      }
    } else {
      for (int j = 0; j < n_; ++j) {
        const double w = dense_[static_cast<std::size_t>(i) * n_ + j];
        if (w < 0.0) throw std::invalid_argument("kernel entries must be nonnegative");
        sum += w;
      }
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("kernel row " + std::to_string(i) + " does not sum to 1");
  }
}

double TransitionKernel::at(int i, int j) const {
  if (!sparse_) return dense_[static_cast<std::size_t>(i) * n_ + j];
  if (i == j) return diag_[i];
  const auto& row = rows_[i];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const auto& p, int t) { return p.first < t; });
  return (it != row.end() && it->first == j) ? it->second : 0.0;
}

void TransitionKernel::forward_apply(std::span<const double> in, std::span<double> out) const {
  if (!sparse_) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < n_; ++i) {
      const double v = in[i];
      if (v == 0.0) continue;
      const double* row = dense_.data() + static_cast<std::size_t>(i) * n_;
      for (int j = 0; j < n_; ++j) out[j] += v * row[j];
    }
  } else {
    for (int j = 0; j < n_; ++j) out[j] = in[j] * diag_[j];
    for (int i = 0; i < n_; ++i) {
      const double v = in[i];
      if (v == 0.0) continue;
      for (const auto& [j, w] : rows_[i]) out[j] += v * w;
    }
  }
}

void TransitionKernel::backward_weights(int to, std::span<const double> factor,
                                        std::span<double> out) const {
  if (!sparse_) {
    for (int s = 0; s < n_; ++s)
      out[s] = factor[s] * dense_[static_cast<std::size_t>(s) * n_ + to];
  } else {
    std::fill(out.begin(), out.end(), 0.0);
    out[to] = factor[to] * diag_[to];
    for (const auto& [s, w] : cols_[to]) out[s] = factor[s] * w;
  }
}

int TransitionKernel::sample_row(int from, double u) const {
  if (!sparse_) {
    return sample_categorical(
        {dense_.data() + static_cast<std::size_t>(from) * n_, static_cast<std::size_t>(n_)},
        1.0, u);
  }
  // diagonal first, then off-diagonal entries in target order
  const double target = u;
  double cum = diag_[from];
  if (cum > target && diag_[from] > 0.0) return from;
  int last = diag_[from] > 0.0 ? from : -1;
  for (const auto& [j, w] : rows_[from]) {
    if (w <= 0.0) continue;
    last = j;
    cum += w;
    if (cum > target) return j;
  }
  return last;
}

TransitionKernel build_kernel(const Generator& a, double omega) {
  const int n = a.size();
  const double max_leave = a.max_leave_rate();
  if (omega < max_leave || omega < 0.0)
    throw InvalidPolicyError("uniformization rate below max leave rate");
  if (omega == 0.0) return TransitionKernel::identity(n);  // all-absorbing generator

  TransitionKernel k;
  k.n_ = n;
  k.sparse_ = a.is_sparse();
  if (!k.sparse_) {
    k.dense_.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
      a.for_each_rate(i, [&](int j, double q) {
        k.dense_[static_cast<std::size_t>(i) * n + j] = q / omega;
      });
      k.dense_[static_cast<std::size_t>(i) * n + i] = 1.0 - a.leave_rate(i) / omega;
    }
  } else {
    k.diag_.resize(n);
    k.rows_.resize(n);
    k.cols_.resize(n);
    for (int i = 0; i < n; ++i) {
      k.diag_[i] = 1.0 - a.leave_rate(i) / omega;
      a.for_each_rate(i, [&](int j, double q) {
        k.rows_[i].emplace_back(j, q / omega);
        k.cols_[j].emplace_back(i, q / omega);
      });
    }
    for (auto& col : k.cols_) std::sort(col.begin(), col.end());
  }
  k.validate();
  return k;
}

UniformizationPolicy::UniformizationPolicy(double multiplier) : multiplier_(multiplier) {
  if (!(multiplier > 1.0))
    throw InvalidPolicyError("uniformization multiplier must exceed 1");
}

}  // namespace unipath
