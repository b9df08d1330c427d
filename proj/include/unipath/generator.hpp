#pragma once

#include <span>
#include <utility>
#include <vector>

namespace unipath {

struct RateEntry {
  int from;
  int to;
  double rate;
};

// Rate matrix of a finite-state Markov jump process. Rows index source
// states; off-diagonal entries are transition rates (1/time) and the
// diagonal of row i is -leave_rate(i), so each row sums to zero by
// construction. Dense and sparse storage share this interface; sparse keeps
// per-row (target, rate) lists, which is what makes banded models cheap.
class Generator {
 public:
  static Generator dense(int n, std::span<const RateEntry> entries);
  static Generator dense_from_matrix(const std::vector<std::vector<double>>& rates);
  static Generator sparse(int n, std::span<const RateEntry> entries);
  static Generator zero(int n) { return dense(n, {}); }

  int size() const { return n_; }
  bool is_sparse() const { return sparse_; }

  // Entry (from, to); the diagonal reads back as -leave_rate(from).
  double rate(int from, int to) const;
  double leave_rate(int i) const { return leave_[i]; }
  double max_leave_rate() const { return max_leave_; }
  long long off_diagonal_count() const { return nnz_; }

  // Visits the nonzero off-diagonal entries of one row as f(to, rate).
  template <typename F>
  void for_each_rate(int from, F&& f) const {
    if (sparse_) {
      for (const auto& [to, q] : rows_[from]) f(to, q);
    } else {
      const double* row = dense_.data() + static_cast<std::size_t>(from) * n_;
      for (int j = 0; j < n_; ++j) {
        if (j != from && row[j] > 0.0) f(j, row[j]);
      }
    }
  }

  // Next-state draw proportional to the off-diagonal rates of `from`,
  // using a single uniform. Requires leave_rate(from) > 0.
  int sample_next_state(int from, double u) const;

 private:
  Generator() = default;
  void finalize();

  int n_ = 0;
  bool sparse_ = false;
  long long nnz_ = 0;
  std::vector<double> dense_;  // n*n row-major, diagonal = -leave
  std::vector<std::vector<std::pair<int, double>>> rows_;  // sparse, sorted by target
  std::vector<double> leave_;
  double max_leave_ = 0.0;
};

// Distribution over the state space at the interval start.
class InitialDistribution {
 public:
  explicit InitialDistribution(std::vector<double> weights);
  static InitialDistribution uniform(int n);
  static InitialDistribution point_mass(int n, int state);
  static InitialDistribution normalized(std::vector<double> weights);

  int size() const { return static_cast<int>(weights_.size()); }
  double operator[](int i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  int sample(double u) const;

 private:
  std::vector<double> weights_;
};

// Row-stochastic transition matrix, typically the uniformized kernel of a
// generator. Sparse kernels keep per-row and per-column off-diagonal lists
// so both filtering directions cost O(nonzeros) per step.
class TransitionKernel {
 public:
  static TransitionKernel identity(int n);
  static TransitionKernel from_matrix(const std::vector<std::vector<double>>& rows);

  int size() const { return n_; }
  bool is_sparse() const { return sparse_; }
  double at(int i, int j) const;

  // out[j] = sum_i in[i] * B(i, j)
  void forward_apply(std::span<const double> in, std::span<double> out) const;
  // out[s] = factor[s] * B(s, to)
  void backward_weights(int to, std::span<const double> factor, std::span<double> out) const;
  // Inverse-CDF draw of the next state from row `from` with one uniform.
  int sample_row(int from, double u) const;

 private:
  TransitionKernel() = default;
  void validate() const;

  int n_ = 0;
  bool sparse_ = false;
  std::vector<double> dense_;  // n*n row-major
  std::vector<double> diag_;   // sparse mode
  std::vector<std::vector<std::pair<int, double>>> rows_;  // sparse off-diag by row
  std::vector<std::vector<std::pair<int, double>>> cols_;  // sparse off-diag by column

  friend TransitionKernel build_kernel(const Generator& a, double omega);
};

// B = I + A/omega. Requires omega >= max leave rate (else the diagonal
// would go negative); storage mode follows the generator.
TransitionKernel build_kernel(const Generator& a, double omega);

// Uniformization rate policy: omega = multiplier * max leave rate.
// The multiplier must exceed 1 strictly or the sampler loses ergodicity
// (states whose leave rate attains the maximum would never gain virtual
// jumps and their jump times could never move).
class UniformizationPolicy {
 public:
  explicit UniformizationPolicy(double multiplier = 2.0);
  double multiplier() const { return multiplier_; }
  double omega_for(const Generator& a) const { return multiplier_ * a.max_leave_rate(); }

 private:
  double multiplier_;
};

}  // namespace unipath
