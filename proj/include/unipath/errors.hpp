#pragma once

#include <stdexcept>
#include <string>

namespace unipath {

// Evidence no state can explain: a forward-filter step whose unnormalized
// message is identically zero. `step` is the offending slot; `node` is set
// when the failure happened inside a CTBN node update, -1 otherwise.
class InconsistentEvidenceError : public std::runtime_error {
 public:
  InconsistentEvidenceError(const std::string& what, int step, int node = -1)
      : std::runtime_error(what), step_(step), node_(node) {}
  int step() const { return step_; }
  int node() const { return node_; }

 private:
  int step_;
  int node_;
};

// Uniformization rate below the maximum leave rate, or a multiplier <= 1.
class InvalidPolicyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Attempt or iteration cap exhausted (rejection sampler, ESS-targeted runs).
class BudgetExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model/config/observation files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unipath
