#include "unipath/ffbs.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "unipath/errors.hpp"

namespace unipath {

void HmmProblem::validate() const {
  if (state_count < 1) throw std::invalid_argument("state count must be positive");
  if (likelihoods.empty()) throw std::invalid_argument("need at least one slot");
  if (static_cast<int>(initial.size()) != state_count)
    throw std::invalid_argument("initial distribution dimension mismatch");
  if (kernels.size() + 1 != likelihoods.size())
    throw std::invalid_argument("need exactly one kernel per step");
  double sum = 0.0;
  for (double w : initial) {
    if (!(w >= 0.0)) throw std::invalid_argument("initial weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("initial distribution must be normalized");
  for (const auto* k : kernels) {
    if (k == nullptr) throw std::invalid_argument("null kernel");
    if (k->size() != state_count) throw std::invalid_argument("kernel dimension mismatch");
  }
  for (const auto& l : likelihoods) {
    if (l.empty()) continue;
    if (static_cast<int>(l.size()) != state_count)
      throw std::invalid_argument("likelihood vector dimension mismatch");
    bool positive = false;
    for (double v : l) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument("likelihood values must be finite and nonnegative");
      positive = positive || v > 0.0;
    }
    if (!positive) throw std::invalid_argument("likelihood vector with no positive entry");
  }
}

namespace {

// Multiply a likelihood vector in, clamp roundoff negatives, normalize.
// Returns the normalizer; 0 or non-finite means inconsistent evidence.
double absorb_and_normalize(std::span<double> msg, const std::vector<double>& like) {
  if (!like.empty())
    for (std::size_t s = 0; s < msg.size(); ++s) msg[s] *= like[s];
  double sum = 0.0;
  for (double& v : msg) {
    if (v < 0.0) v = 0.0;
    sum += v;
  }
  if (!(sum > 0.0) || !std::isfinite(sum)) return 0.0;
  for (double& v : msg) v /= sum;
  return sum;
}

}  // namespace

ForwardResult forward_filter(const HmmProblem& p) {
  const int n = p.state_count;
  const int slots = p.length();
  if (slots < 1 || n < 1) throw std::invalid_argument("empty HMM problem");
  if (static_cast<int>(p.initial.size()) != n ||
      static_cast<int>(p.kernels.size()) != slots - 1)
    throw std::invalid_argument("HMM problem dimensions disagree");

  ForwardResult out;
  out.state_count = n;
  out.messages.resize(static_cast<std::size_t>(slots) * n);

  std::span<double> cur(out.messages.data(), static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) cur[s] = p.initial[s];
  double norm = absorb_and_normalize(cur, p.likelihoods[0]);
  if (norm == 0.0)
    throw InconsistentEvidenceError("no state consistent with evidence at slot 0", 0);
  out.log_evidence = std::log(norm);

  for (int i = 1; i < slots; ++i) {
    std::span<const double> prev(out.messages.data() + static_cast<std::size_t>(i - 1) * n,
                                 static_cast<std::size_t>(n));
    std::span<double> next(out.messages.data() + static_cast<std::size_t>(i) * n,
                           static_cast<std::size_t>(n));
    p.kernels[i - 1]->forward_apply(prev, next);
    norm = absorb_and_normalize(next, p.likelihoods[i]);
    if (norm == 0.0)
      throw InconsistentEvidenceError(
          "no state consistent with evidence at slot " + std::to_string(i), i);
    out.log_evidence += std::log(norm);
  }
  return out;
}

std::vector<int> backward_sample(const HmmProblem& p, const ForwardResult& fwd, Rng& rng) {
  const int n = p.state_count;
  const int slots = p.length();
  if (fwd.state_count != n ||
      fwd.messages.size() != static_cast<std::size_t>(slots) * n)
    throw std::invalid_argument("forward result does not match the problem");

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> seq(slots);
  seq[slots - 1] = sample_categorical(fwd.message(slots - 1), 1.0, unif(rng));

  std::vector<double> buf(n);
  for (int i = slots - 2; i >= 0; --i) {
    p.kernels[i]->backward_weights(seq[i + 1], fwd.message(i), buf);
    double total = 0.0;
    for (double& v : buf) {
      if (v < 0.0) v = 0.0;
      total += v;
    }
    // Cannot be zero when forward filtering succeeded.
    assert(total > 0.0);
    if (!(total > 0.0))
      throw std::logic_error("backward step distribution normalized to zero");
    seq[i] = sample_categorical(buf, total, unif(rng));
  }
  return seq;
}

}  // namespace unipath
