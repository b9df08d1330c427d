#pragma once

#include <span>
#include <string>
#include <vector>

#include "unipath/generator.hpp"
#include "unipath/mjp_sampler.hpp"
#include "unipath/observations.hpp"
#include "unipath/path.hpp"
#include "unipath/rng.hpp"
#include "unipath/stats.hpp"

namespace unipath {

// Factored initial distribution: independent per-node marginals, or an
// explicit joint table over configurations for small networks.
struct CtbnInitial {
  enum class Kind { Product, Joint };
  Kind kind = Kind::Product;
  std::vector<InitialDistribution> marginals;  // Product: one per node
  std::vector<double> joint;                   // Joint: mixed-radix table

  static CtbnInitial product(std::vector<InitialDistribution> per_node);
  static CtbnInitial joint_table(std::vector<double> table);
};

struct CtbnNode {
  std::string name;
  int state_count = 0;
  std::vector<int> parents;            // node indices, order fixes the config encoding
  std::vector<Generator> rate_table;   // one per parent configuration
};

// Directed (possibly cyclic) graph of conditionally-rated nodes. Parent
// configurations index rate tables in mixed radix with the first listed
// parent least significant.
class CtbnModel {
 public:
  CtbnModel(std::vector<CtbnNode> nodes, CtbnInitial initial);

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const CtbnNode& node(int k) const { return nodes_[k]; }
  const std::vector<int>& children(int k) const { return children_[k]; }
  const CtbnInitial& initial() const { return initial_; }

  int parent_config_index(int k, std::span<const int> full_config) const;
  const Generator& generator(int k, int parent_config) const {
    return nodes_[k].rate_table[parent_config];
  }
  const Generator& generator_for(int k, std::span<const int> full_config) const {
    return nodes_[k].rate_table[parent_config_index(k, full_config)];
  }

  // Product of all state counts (joint space size); throws when it
  // overflows int.
  int config_count() const;
  int encode_config(std::span<const int> states) const;
  void decode_config(int index, std::span<int> states) const;

  std::vector<int> sample_initial_config(Rng& rng) const;
  // Gibbs conditional of node k's initial state given the other nodes'.
  InitialDistribution initial_conditional(int k, std::span<const int> config) const;

 private:
  std::vector<CtbnNode> nodes_;
  std::vector<std::vector<int>> children_;
  CtbnInitial initial_;
};

// One path per node over a common interval. With probability one no two
// nodes jump at the same instant; construction rejects coincident times.
class CtbnPath {
 public:
  explicit CtbnPath(std::vector<MjpPath> node_paths);

  int node_count() const { return static_cast<int>(paths_.size()); }
  const MjpPath& node(int k) const { return paths_[k]; }
  std::span<const MjpPath> nodes() const { return paths_; }
  double t_start() const { return paths_.front().t_start(); }
  double t_end() const { return paths_.front().t_end(); }

  CtbnPath with_node_path(int k, MjpPath replacement) const;
  std::vector<int> config_at(double t) const;
  std::vector<int> initial_config() const;

 private:
  std::vector<MjpPath> paths_;
};

// Piecewise-constant generator for one node given its parents' paths:
// breakpoints at t_start plus every parent jump, one generator per segment.
// Generators are borrowed from the model's rate tables.
class RateTimeline {
 public:
  RateTimeline(double t_start, double t_end, std::vector<double> breaks,
               std::vector<const Generator*> generators);

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  int segment_count() const { return static_cast<int>(gens_.size()); }
  const Generator& generator(int segment) const { return *gens_[segment]; }
  double segment_start(int segment) const { return breaks_[segment]; }
  double segment_end(int segment) const {
    return segment + 1 < segment_count() ? breaks_[segment + 1] : t_end_;
  }
  int segment_of(double t) const;
  // Breakpoints beyond t_start, i.e. the parent-change times.
  std::span<const double> parent_change_times() const {
    return {breaks_.data() + 1, breaks_.size() - 1};
  }

 private:
  double t_start_, t_end_;
  std::vector<double> breaks_;
  std::vector<const Generator*> gens_;
};

// Race-construction forward simulation of the whole network.
CtbnPath sample_ctbn_prior(const CtbnModel& model, double t_start, double t_end, Rng& rng);

RateTimeline node_rate_timeline(const CtbnModel& model, const CtbnPath& path, int k);

// Log probability of the children's paths over [a, b) when node k is held
// at `candidate`: per child, log-rate terms for the child's jumps in (a, b]
// plus survival terms over the pieces cut by the child's jumps and the
// child's other parents' jumps. No initial-distribution term.
double child_segment_loglik(const CtbnModel& model, const CtbnPath& path, int k,
                            int candidate, double a, double b);

// Auxiliary-variable Gibbs update of one node's entire path given its
// Markov blanket: piecewise uniformization over the parent timeline,
// identity-kernel steps at parent-change times, slot likelihoods combining
// discrete observations with the children's path densities.
CtbnPath ctbn_gibbs_node_update(const CtbnModel& model, const CtbnPath& path, int k,
                                const ObservationSet& node_obs,
                                const UniformizationPolicy& policy, Rng& rng,
                                GibbsInfo* info = nullptr);

enum class SweepOrder { Fixed, RandomScan };

// One sweep: resample every node given the latest paths of the others.
CtbnPath ctbn_gibbs_sweep(const CtbnModel& model, const CtbnPath& path,
                          const std::vector<ObservationSet>& observations,
                          const UniformizationPolicy& policy, Rng& rng,
                          GibbsInfo* info = nullptr,
                          SweepOrder order = SweepOrder::Fixed);

struct CtbnChainResult {
  // samples[i][k]: sufficient statistics of node k at retained sweep i
  std::vector<std::vector<SufficientStats>> samples;
  std::vector<int> grid_sizes;         // per sweep, summed over node updates
  std::vector<double> log_evidences;   // per sweep, summed over node updates
  std::vector<double> seconds;         // per sweep
};

void run_ctbn_chain_stream(const CtbnModel& model, const std::vector<ObservationSet>& observations,
                           double t_start, double t_end, int sweeps, int burn_in,
                           const UniformizationPolicy& policy, Rng& rng,
                           const std::function<void(const CtbnPath&, const GibbsInfo&, int)>& on_sweep,
                           int init_retries = 32);

CtbnChainResult run_ctbn_chain(const CtbnModel& model, const std::vector<ObservationSet>& observations,
                               double t_start, double t_end, int sweeps, int burn_in,
                               const UniformizationPolicy& policy, Rng& rng,
                               int init_retries = 32);

// Amalgamation: the joint process over the product state space, used as a
// ground-truth oracle for small networks.
struct FlatCtbn {
  Generator generator;
  InitialDistribution initial;
  std::vector<int> radices;  // per-node state counts, node 0 least significant

  int encode(std::span<const int> states) const;
  int node_state(int config_index, int k) const;
};

FlatCtbn flatten_ctbn(const CtbnModel& model);

// Per-node observation sets merged onto the joint space (channel = node).
ObservationSet flatten_observations(const CtbnModel& model, const FlatCtbn& flat,
                                    const std::vector<ObservationSet>& per_node);

// Joint-space sufficient statistics projected onto one node.
SufficientStats project_node_stats(const FlatCtbn& flat, const SufficientStats& joint, int k);

// Joint-space path split into per-node paths.
CtbnPath unflatten_path(const FlatCtbn& flat, const MjpPath& joint);

}  // namespace unipath
