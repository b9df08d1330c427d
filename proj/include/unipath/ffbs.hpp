#pragma once

#include <span>
#include <vector>

#include "unipath/generator.hpp"
#include "unipath/rng.hpp"

namespace unipath {

// Finite-horizon discrete chain with per-step kernels and per-slot
// likelihood vectors. Kernels are borrowed, not owned: a uniformized MJP
// uses one kernel for every step and a CTBN node update reuses one kernel
// per timeline segment, so slots store pointers into caller-owned storage.
// An empty likelihood vector means all-ones (unobserved slot).
struct HmmProblem {
  int state_count = 0;
  std::vector<double> initial;                    // normalized, length n
  std::vector<const TransitionKernel*> kernels;   // length L-1
  std::vector<std::vector<double>> likelihoods;   // length L

  int length() const { return static_cast<int>(likelihoods.size()); }
  void validate() const;  // deep checks, O(n^2 L); for tests and debugging
};

// Normalized filtered distributions, stored flat (slot-major) to keep the
// per-iteration allocation count flat.
struct ForwardResult {
  int state_count = 0;
  std::vector<double> messages;  // L * n
  double log_evidence = 0.0;

  std::span<const double> message(int slot) const {
    return {messages.data() + static_cast<std::size_t>(slot) * state_count,
            static_cast<std::size_t>(state_count)};
  }
};

// Filtered distribution per slot plus the log normalizing constant
// (log of the total probability of all likelihood terms under the chain).
// Throws InconsistentEvidenceError naming the first all-zero slot.
ForwardResult forward_filter(const HmmProblem& p);

// Exact posterior draw of the hidden sequence given all likelihood terms.
// One uniform per slot (inverse CDF), so runs replay from a counted stream.
std::vector<int> backward_sample(const HmmProblem& p, const ForwardResult& fwd, Rng& rng);

}  // namespace unipath
