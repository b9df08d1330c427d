#include "unipath/ctbn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>

#include "unipath/errors.hpp"
#include "unipath/ffbs.hpp"
#include "unipath/logprob.hpp"

namespace unipath {

CtbnInitial CtbnInitial::product(std::vector<InitialDistribution> per_node) {
  CtbnInitial init;
  init.kind = Kind::Product;
  init.marginals = std::move(per_node);
  return init;
}

CtbnInitial CtbnInitial::joint_table(std::vector<double> table) {
  CtbnInitial init;
  init.kind = Kind::Joint;
  init.joint = std::move(table);
  double sum = 0.0;
  for (double w : init.joint) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("joint initial weights must be finite and nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("joint initial table must sum to 1");
  return init;
}

CtbnModel::CtbnModel(std::vector<CtbnNode> nodes, CtbnInitial initial)
    : nodes_(std::move(nodes)), initial_(std::move(initial)) {
  const int m = node_count();
  if (m < 1) throw std::invalid_argument("CTBN needs at least one node");
  children_.resize(m);
  for (int k = 0; k < m; ++k) {
    const CtbnNode& node = nodes_[k];
    if (node.state_count < 1) throw std::invalid_argument("node state count must be positive");
    long long configs = 1;
    std::vector<bool> seen(m, false);
    for (int p : node.parents) {
      if (p < 0 || p >= m) throw std::invalid_argument("parent index out of range");
      if (p == k) throw std::invalid_argument("a node cannot be its own parent");
      if (seen[p]) throw std::invalid_argument("duplicate parent");
      seen[p] = true;
      configs *= nodes_[p].state_count;
      if (configs > (1 << 24)) throw std::invalid_argument("parent configuration space too large");
      children_[p].push_back(k);
    }
    if (static_cast<long long>(node.rate_table.size()) != configs)
      throw std::invalid_argument("rate table size must match the parent configuration count");
    for (const Generator& g : node.rate_table)
      if (g.size() != node.state_count)
        throw std::invalid_argument("conditional generator dimension mismatch");
  }
  if (initial_.kind == CtbnInitial::Kind::Product) {
    if (static_cast<int>(initial_.marginals.size()) != m)
      throw std::invalid_argument("need one initial marginal per node");
    for (int k = 0; k < m; ++k)
      if (initial_.marginals[k].size() != nodes_[k].state_count)
        throw std::invalid_argument("initial marginal dimension mismatch");
  } else {
    if (static_cast<long long>(initial_.joint.size()) != config_count())
      throw std::invalid_argument("joint initial table size must match the configuration space");
  }
}

int CtbnModel::parent_config_index(int k, std::span<const int> full_config) const {
  const CtbnNode& node = nodes_[k];
  int index = 0;
  int stride = 1;
  for (int p : node.parents) {  // first listed parent is least significant
    index += full_config[p] * stride;
    stride *= nodes_[p].state_count;
  }
  return index;
}

int CtbnModel::config_count() const {
  long long total = 1;
  for (const auto& node : nodes_) {
    total *= node.state_count;
    if (total > (1 << 24)) throw std::invalid_argument("configuration space too large");
  }
  return static_cast<int>(total);
}

int CtbnModel::encode_config(std::span<const int> states) const {
  int index = 0;
  int stride = 1;
  for (int k = 0; k < node_count(); ++k) {
    index += states[k] * stride;
    stride *= nodes_[k].state_count;
  }
  return index;
}

void CtbnModel::decode_config(int index, std::span<int> states) const {
  for (int k = 0; k < node_count(); ++k) {
    states[k] = index % nodes_[k].state_count;
    index /= nodes_[k].state_count;
  }
}

std::vector<int> CtbnModel::sample_initial_config(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> config(node_count());
  if (initial_.kind == CtbnInitial::Kind::Product) {
    for (int k = 0; k < node_count(); ++k)
      config[k] = initial_.marginals[k].sample(unif(rng));
  } else {
    const int idx = sample_categorical(initial_.joint, 1.0, unif(rng));
    decode_config(idx, config);
  }
  return config;
}

InitialDistribution CtbnModel::initial_conditional(int k, std::span<const int> config) const {
  if (initial_.kind == CtbnInitial::Kind::Product) return initial_.marginals[k];
  std::vector<int> probe(config.begin(), config.end());
  std::vector<double> slice(nodes_[k].state_count);
  double sum = 0.0;
  for (int s = 0; s < nodes_[k].state_count; ++s) {
    probe[k] = s;
    slice[s] = initial_.joint[encode_config(probe)];
    sum += slice[s];
  }
  if (!(sum > 0.0))
    throw InconsistentEvidenceError(
        "joint initial table assigns zero mass to every state of node " + std::to_string(k),
        0, k);
  return InitialDistribution::normalized(std::move(slice));
}

CtbnPath::CtbnPath(std::vector<MjpPath> node_paths) : paths_(std::move(node_paths)) {
  if (paths_.empty()) throw std::invalid_argument("CTBN path needs at least one node");
  std::vector<double> all_times;
  for (const auto& p : paths_) {
    if (p.t_start() != paths_[0].t_start() || p.t_end() != paths_[0].t_end())
      throw std::invalid_argument("node paths must share one interval");
    all_times.insert(all_times.end(), p.jump_times().begin(), p.jump_times().end());
  }
  std::sort(all_times.begin(), all_times.end());
  if (std::adjacent_find(all_times.begin(), all_times.end()) != all_times.end())
    throw std::invalid_argument("coincident jump times across nodes");
}

CtbnPath CtbnPath::with_node_path(int k, MjpPath replacement) const {
  std::vector<MjpPath> paths = paths_;
  paths[k] = std::move(replacement);
  return CtbnPath(std::move(paths));
}

std::vector<int> CtbnPath::config_at(double t) const {
  std::vector<int> config(paths_.size());
  for (std::size_t k = 0; k < paths_.size(); ++k) config[k] = paths_[k].state_at(t);
  return config;
}

std::vector<int> CtbnPath::initial_config() const {
  std::vector<int> config(paths_.size());
  for (std::size_t k = 0; k < paths_.size(); ++k) config[k] = paths_[k].states()[0];
  return config;
}

RateTimeline::RateTimeline(double t_start, double t_end, std::vector<double> breaks,
                           std::vector<const Generator*> generators)
    : t_start_(t_start), t_end_(t_end), breaks_(std::move(breaks)),
      gens_(std::move(generators)) {
  if (breaks_.empty() || breaks_[0] != t_start_)
    throw std::invalid_argument("timeline must start at t_start");
  if (breaks_.size() != gens_.size())
    throw std::invalid_argument("one generator per timeline segment");
  for (std::size_t i = 1; i < breaks_.size(); ++i)
    if (!(breaks_[i] > breaks_[i - 1]) || !(breaks_[i] < t_end_))
      throw std::invalid_argument("timeline breakpoints must be strictly increasing");
  const int dim = gens_[0]->size();
  for (const Generator* g : gens_)
    if (g->size() != dim) throw std::invalid_argument("timeline generators must share one dimension");
}

int RateTimeline::segment_of(double t) const {
  if (t < t_start_ || t > t_end_) throw std::domain_error("time outside the timeline");
  return static_cast<int>(std::upper_bound(breaks_.begin() + 1, breaks_.end(), t) -
                          (breaks_.begin() + 1));
}

CtbnPath sample_ctbn_prior(const CtbnModel& model, double t_start, double t_end, Rng& rng) {
  if (!(t_start <= t_end)) throw std::invalid_argument("bad interval");
  const int m = model.node_count();
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<int> config = model.sample_initial_config(rng);
  std::vector<std::vector<double>> times(m);
  std::vector<std::vector<int>> states(m);
  for (int k = 0; k < m; ++k) states[k].push_back(config[k]);

  // Total-rate race: by memorylessness, redrawing every clock after each
  // event matches per-node competing exponentials in distribution.
  double t = t_start;
  std::vector<double> leave(m);
  while (true) {
    double total = 0.0;
    for (int k = 0; k < m; ++k) {
      leave[k] = model.generator_for(k, config).leave_rate(config[k]);
      total += leave[k];
    }
    if (!(total > 0.0)) break;
    t += std::exponential_distribution<double>(total)(rng);
    if (t >= t_end) break;
    const int k = sample_categorical(leave, total, unif(rng));
    const Generator& gen = model.generator_for(k, config);
    const int next = gen.sample_next_state(config[k], unif(rng));
    config[k] = next;
    times[k].push_back(t);
    states[k].push_back(next);
  }

  std::vector<MjpPath> paths;
  paths.reserve(m);
  for (int k = 0; k < m; ++k)
    paths.emplace_back(t_start, t_end, std::move(times[k]), std::move(states[k]));
  return CtbnPath(std::move(paths));
}

namespace detail_ctbn {

struct Cut {
  double t;
  int child_state_after;  // -1 for a parent switch
};

double child_segment_loglik(const CtbnModel& model, std::span<const MjpPath> paths, int k,
                            int candidate, double a, double b) {
  if (!(a <= b)) throw std::invalid_argument("bad segment");
  if (candidate < 0 || candidate >= model.node(k).state_count)
    throw std::invalid_argument("candidate state out of range");

  double total = 0.0;
  thread_local std::vector<int> config;
  thread_local std::vector<Cut> cuts;
  // Only the entries for a child's parents are read, and each is written
  // just before the table lookup; no need to clear the rest.
  config.resize(model.node_count());
  for (int c : model.children(k)) {
    const CtbnNode& child = model.node(c);
    const MjpPath& cpath = paths[c];

    // Cut points: the child's own jumps in (a, b] (each contributes a
    // log-rate term under the generator active just before it) and the
    // child's other parents' jumps in (a, b) (generator switches only).
    cuts.clear();
    {
      const auto jt = cpath.jump_times();
      const auto st = cpath.states();
      for (int i = 0; i < cpath.jump_count(); ++i)
        if (jt[i] > a && jt[i] <= b) cuts.push_back({jt[i], st[i + 1]});
    }
    for (int p : child.parents) {
      if (p == k) continue;
      for (double t : paths[p].jump_times())
        if (t > a && t < b) cuts.push_back({t, -1});
    }
    std::sort(cuts.begin(), cuts.end(), [](const Cut& x, const Cut& y) { return x.t < y.t; });
    cuts.push_back({b, -1});  // sentinel: closes the final piece

    double piece_start = a;
    for (const Cut& cut : cuts) {
      const int child_state = cpath.state_at(piece_start);
      for (int p : child.parents)
        config[p] = p == k ? candidate : paths[p].state_at(piece_start);
      const Generator& gen = model.generator(c, model.parent_config_index(c, config));
      total -= gen.leave_rate(child_state) * (cut.t - piece_start);
      if (cut.child_state_after >= 0)
        total += log_or_zero(gen.rate(child_state, cut.child_state_after));
      piece_start = cut.t;
    }
  }
  return total;
}

RateTimeline node_rate_timeline(const CtbnModel& model, std::span<const MjpPath> paths,
                                int k) {
  const double t_start = paths[k].t_start();
  const double t_end = paths[k].t_end();
  std::vector<double> breaks{t_start};
  for (int p : model.node(k).parents) {
    const auto jumps = paths[p].jump_times();
    breaks.insert(breaks.end(), jumps.begin(), jumps.end());
  }
  std::sort(breaks.begin() + 1, breaks.end());

  std::vector<const Generator*> gens;
  gens.reserve(breaks.size());
  std::vector<int> config(model.node_count());
  for (double b : breaks) {
    for (int p : model.node(k).parents) config[p] = paths[p].state_at(b);
    gens.push_back(&model.generator(k, model.parent_config_index(k, config)));
  }
  return RateTimeline(t_start, t_end, std::move(breaks), std::move(gens));
}

}  // namespace detail_ctbn

RateTimeline node_rate_timeline(const CtbnModel& model, const CtbnPath& path, int k) {
  return detail_ctbn::node_rate_timeline(model, path.nodes(), k);
}

double child_segment_loglik(const CtbnModel& model, const CtbnPath& path, int k,
                            int candidate, double a, double b) {
  return detail_ctbn::child_segment_loglik(model, path.nodes(), k, candidate, a, b);
}

namespace {

struct NodeUpdateGrid {
  std::vector<double> times;
  std::vector<bool> parent_change;
};

// Merged T ∪ U ∪ P for one node update, tagging parent-change times.
NodeUpdateGrid merge_update_grid(const MjpPath& current, std::span<const double> virtual_times,
                                 std::span<const double> parent_times) {
  NodeUpdateGrid grid;
  const auto t = current.jump_times();
  grid.times.reserve(t.size() + virtual_times.size() + parent_times.size());
  grid.times.insert(grid.times.end(), t.begin(), t.end());
  grid.times.insert(grid.times.end(), virtual_times.begin(), virtual_times.end());
  std::vector<double> sorted_parents(parent_times.begin(), parent_times.end());
  grid.times.insert(grid.times.end(), sorted_parents.begin(), sorted_parents.end());
  std::sort(grid.times.begin(), grid.times.end());
  if (std::adjacent_find(grid.times.begin(), grid.times.end()) != grid.times.end())
    throw std::invalid_argument("coincident times in the update grid");
  grid.parent_change.resize(grid.times.size(), false);
  for (double p : sorted_parents) {
    const auto it = std::lower_bound(grid.times.begin(), grid.times.end(), p);
    grid.parent_change[it - grid.times.begin()] = true;
  }
  return grid;
}

}  // namespace

namespace detail_ctbn {

// Core of the node update, operating on the bare path array so sweeps can
// splice in place instead of copying the whole network path per node.
MjpPath resample_node_path(const CtbnModel& model, std::span<const MjpPath> paths, int k,
                           const ObservationSet& node_obs,
                           const UniformizationPolicy& policy, Rng& rng, GibbsInfo* info) {
  const MjpPath& current = paths[k];
  const double t_start = current.t_start();
  const double t_end = current.t_end();
  const int n = model.node(k).state_count;
  if (!node_obs.empty() &&
      (node_obs.all().front().time < t_start || node_obs.all().back().time > t_end))
    throw std::invalid_argument("observation outside the interval");

  const RateTimeline timeline = node_rate_timeline(model, paths, k);
  const int segments = timeline.segment_count();
  std::vector<double> seg_omega(segments);
  for (int j = 0; j < segments; ++j)
    seg_omega[j] = policy.multiplier() * timeline.generator(j).max_leave_rate();

  // Virtual jumps: inhomogeneous Poisson with rate omega(t) - leave(state(t)),
  // piecewise constant over the refinement of the node's jumps and the
  // parent-change times.
  std::vector<double> virt;
  {
    std::vector<double> cuts{t_start};
    cuts.insert(cuts.end(), current.jump_times().begin(), current.jump_times().end());
    cuts.insert(cuts.end(), timeline.parent_change_times().begin(),
                timeline.parent_change_times().end());
    cuts.push_back(t_end);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (!(cuts[i + 1] > cuts[i])) continue;
      const int seg = timeline.segment_of(cuts[i]);
      const double rate = std::max(
          0.0, seg_omega[seg] - timeline.generator(seg).leave_rate(current.state_at(cuts[i])));
      auto events = poisson_event_times(rate, cuts[i], cuts[i + 1], rng);
      virt.insert(virt.end(), events.begin(), events.end());
    }
  }

  const NodeUpdateGrid grid =
      merge_update_grid(current, virt, timeline.parent_change_times());
  const int slots = static_cast<int>(grid.times.size()) + 1;

  // Kernels cached per distinct conditional generator (segments repeat the
  // few table entries), plus a shared identity kernel for parent-change
  // steps, where the node almost surely does not jump. Heap-allocated so
  // handed-out pointers survive cache growth.
  std::vector<std::pair<const Generator*, std::unique_ptr<TransitionKernel>>> kernel_cache;
  const TransitionKernel identity = TransitionKernel::identity(n);
  auto kernel_for = [&](double t) -> const TransitionKernel* {
    const int seg = timeline.segment_of(t);
    const Generator* gen = &timeline.generator(seg);
    for (const auto& [key, kernel] : kernel_cache)
      if (key == gen) return kernel.get();
    kernel_cache.emplace_back(
        gen, std::make_unique<TransitionKernel>(build_kernel(*gen, seg_omega[seg])));
    return kernel_cache.back().second.get();
  };

  HmmProblem hp;
  hp.state_count = n;
  {
    thread_local std::vector<int> config0;
    config0.resize(paths.size());
    for (std::size_t j = 0; j < paths.size(); ++j) config0[j] = paths[j].states()[0];
    const InitialDistribution pi0 = model.initial_conditional(k, config0);
    hp.initial.assign(pi0.weights().begin(), pi0.weights().end());
  }
  hp.kernels.resize(slots - 1);
  for (int i = 0; i + 1 < slots; ++i)
    hp.kernels[i] = grid.parent_change[i] ? &identity : kernel_for(grid.times[i]);
  hp.likelihoods.resize(slots);

  // Slot likelihoods: discrete observations in [g_i, g_{i+1}) (final slot
  // closed at t_end) times the children's path likelihood, assembled in log
  // space and shifted per slot so soft evidence cannot underflow to an
  // all-zero vector.
  const bool has_children = !model.children(k).empty();
  double shift_sum = 0.0;
  std::span<const Observation> obs = node_obs.empty() ? std::span<const Observation>{}
                                                      : node_obs.all();
  std::size_t next_obs = 0;
  std::vector<double> loglik(n);
  for (int i = 0; i < slots; ++i) {
    const double lo = i == 0 ? t_start : grid.times[i - 1];
    const double hi = i + 1 < slots ? grid.times[i] : t_end;
    bool any_obs = false;
    std::fill(loglik.begin(), loglik.end(), 0.0);
    while (next_obs < obs.size() &&
           (obs[next_obs].time < hi || (i + 1 == slots && obs[next_obs].time <= t_end))) {
      any_obs = true;
      for (int s = 0; s < n; ++s)
        loglik[s] += log_or_zero(node_obs.likelihood(s, obs[next_obs]));
      ++next_obs;
    }
    if (!has_children && !any_obs) continue;  // all-ones slot
    if (has_children)
      for (int s = 0; s < n; ++s)
        loglik[s] += child_segment_loglik(model, paths, k, s, lo, hi);
    double shift = log_zero;
    for (double v : loglik) shift = std::max(shift, v);
    if (is_log_zero(shift))
      throw InconsistentEvidenceError(
          "no state of node " + std::to_string(k) + " consistent with evidence at slot " +
              std::to_string(i),
          i, k);
    shift_sum += shift;
    auto& like = hp.likelihoods[i];
    like.resize(n);
    for (int s = 0; s < n; ++s) like[s] = std::exp(loglik[s] - shift);
  }

  const ForwardResult fwd = [&] {
    try {
      return forward_filter(hp);
    } catch (const InconsistentEvidenceError& e) {
      throw InconsistentEvidenceError(
          "node " + std::to_string(k) + ": " + e.what(), e.step(), k);
    }
  }();
  const std::vector<int> resampled = backward_sample(hp, fwd, rng);

  // Identity steps must hold the state fixed; this is the structural
  // guarantee that the node does not jump at parent-change times.
  for (int i = 0; i + 1 < slots; ++i)
    if (grid.parent_change[i] && resampled[i + 1] != resampled[i])
      throw std::logic_error("state changed across a parent-change time");

  std::vector<double> new_times;
  std::vector<int> new_states{resampled[0]};
  for (int i = 0; i + 1 < slots; ++i) {
    if (resampled[i + 1] != resampled[i]) {
      new_times.push_back(grid.times[i]);
      new_states.push_back(resampled[i + 1]);
    }
  }
  if (info) {
    info->grid_size = static_cast<int>(grid.times.size());
    info->log_evidence = fwd.log_evidence + shift_sum;
  }
  return MjpPath(t_start, t_end, std::move(new_times), std::move(new_states));
}

}  // namespace detail_ctbn

CtbnPath ctbn_gibbs_node_update(const CtbnModel& model, const CtbnPath& path, int k,
                                const ObservationSet& node_obs,
                                const UniformizationPolicy& policy, Rng& rng,
                                GibbsInfo* info) {
  return path.with_node_path(
      k, detail_ctbn::resample_node_path(model, path.nodes(), k, node_obs, policy, rng, info));
}

CtbnPath ctbn_gibbs_sweep(const CtbnModel& model, const CtbnPath& path,
                          const std::vector<ObservationSet>& observations,
                          const UniformizationPolicy& policy, Rng& rng,
                          GibbsInfo* info, SweepOrder order) {
  if (static_cast<int>(observations.size()) != model.node_count())
    throw std::invalid_argument("need one observation set per node (empty sets allowed)");
  std::vector<int> nodes(model.node_count());
  std::iota(nodes.begin(), nodes.end(), 0);
  if (order == SweepOrder::RandomScan)
    std::shuffle(nodes.begin(), nodes.end(), rng);

  // Updates splice into the bare path array; the CtbnPath constructed at
  // the end re-validates global non-coincidence of jump times.
  std::vector<MjpPath> paths(path.nodes().begin(), path.nodes().end());
  GibbsInfo total;
  for (int k : nodes) {
    GibbsInfo step;
    paths[k] =
        detail_ctbn::resample_node_path(model, paths, k, observations[k], policy, rng, &step);
    total.grid_size += step.grid_size;
    total.log_evidence += step.log_evidence;
  }
  if (info) *info = total;
  return CtbnPath(std::move(paths));
}

namespace {

// Observation-consistent fallback start for one node, mirroring the plain
// MJP fallback. `slot` staggers jump times so nodes cannot collide.
MjpPath forced_node_path(const CtbnModel& model, const ObservationSet& obs, int k,
                         double t_start, double t_end, int slot, int total_nodes) {
  const int n = model.node(k).state_count;
  const double nudge = (t_end - t_start) * 1e-9 * (slot + 1) / total_nodes;
  std::vector<double> times;
  std::vector<int> states;
  double prev_time = t_start;
  for (const auto& o : obs.all()) {
    int best = 0;
    double best_like = -1.0;
    for (int s = 0; s < n; ++s) {
      const double l = obs.likelihood(s, o);
      if (l > best_like) {
        best_like = l;
        best = s;
      }
    }
    if (states.empty()) {
      states.push_back(best);
      continue;
    }
    if (best == states.back()) continue;
    const double jump = o.time - nudge;
    if (jump <= prev_time || jump >= t_end) continue;
    times.push_back(jump);
    states.push_back(best);
    prev_time = jump;
  }
  if (states.empty()) states.push_back(0);
  return MjpPath(t_start, t_end, std::move(times), std::move(states));
}

}  // namespace

void run_ctbn_chain_stream(const CtbnModel& model, const std::vector<ObservationSet>& observations,
                           double t_start, double t_end, int sweeps, int burn_in,
                           const UniformizationPolicy& policy, Rng& rng,
                           const std::function<void(const CtbnPath&, const GibbsInfo&, int)>& on_sweep,
                           int init_retries) {
  if (burn_in < 0 || sweeps <= burn_in)
    throw std::invalid_argument("need sweeps > burn_in >= 0");
  if (!(t_start < t_end)) throw std::invalid_argument("need t_start < t_end");
  if (static_cast<int>(observations.size()) != model.node_count())
    throw std::invalid_argument("need one observation set per node (empty sets allowed)");
  for (int k = 0; k < model.node_count(); ++k) {
    if (observations[k].empty()) continue;
    if (observations[k].state_count() != model.node(k).state_count)
      throw std::invalid_argument("observation state count mismatch for node " + std::to_string(k));
    for (const auto& o : observations[k].all())
      if (o.time < t_start || o.time > t_end)
        throw std::invalid_argument("observation outside the interval");
  }

  CtbnPath current = sample_ctbn_prior(model, t_start, t_end, rng);
  int attempts = 1;
  GibbsInfo inf;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    while (true) {
      try {
        current = ctbn_gibbs_sweep(model, current, observations, policy, rng, &inf);
        break;
      } catch (const InconsistentEvidenceError&) {
        if (sweep > 0 || attempts > init_retries) throw;
        if (attempts == init_retries) {
          std::vector<MjpPath> forced;
          for (int k = 0; k < model.node_count(); ++k)
            forced.push_back(forced_node_path(model, observations[k], k, t_start, t_end, k,
                                              model.node_count()));
          current = CtbnPath(std::move(forced));
        } else {
          current = sample_ctbn_prior(model, t_start, t_end, rng);
        }
        ++attempts;
      }
    }
    on_sweep(current, inf, sweep);
  }
}

CtbnChainResult run_ctbn_chain(const CtbnModel& model, const std::vector<ObservationSet>& observations,
                               double t_start, double t_end, int sweeps, int burn_in,
                               const UniformizationPolicy& policy, Rng& rng,
                               int init_retries) {
  CtbnChainResult result;
  auto last = std::chrono::steady_clock::now();
  run_ctbn_chain_stream(
      model, observations, t_start, t_end, sweeps, burn_in, policy, rng,
      [&](const CtbnPath& path, const GibbsInfo& info, int sweep) {
        const auto now = std::chrono::steady_clock::now();
        if (sweep >= burn_in) {
          std::vector<SufficientStats> per_node;
          per_node.reserve(model.node_count());
          for (int k = 0; k < model.node_count(); ++k)
            per_node.push_back(sufficient_stats(path.node(k), model.node(k).state_count));
          result.samples.push_back(std::move(per_node));
        }
        result.grid_sizes.push_back(info.grid_size);
        result.log_evidences.push_back(info.log_evidence);
        result.seconds.push_back(std::chrono::duration<double>(now - last).count());
        last = now;
      },
      init_retries);
  return result;
}

int FlatCtbn::encode(std::span<const int> states) const {
  int index = 0;
  int stride = 1;
  for (std::size_t k = 0; k < radices.size(); ++k) {
    index += states[k] * stride;
    stride *= radices[k];
  }
  return index;
}

int FlatCtbn::node_state(int config_index, int k) const {
  for (int j = 0; j < k; ++j) config_index /= radices[j];
  return config_index % radices[k];
}

FlatCtbn flatten_ctbn(const CtbnModel& model) {
  const int m = model.node_count();
  const int total = model.config_count();

  std::vector<int> radices(m);
  for (int k = 0; k < m; ++k) radices[k] = model.node(k).state_count;

  std::vector<RateEntry> entries;
  std::vector<int> config(m);
  std::vector<int> strides(m);
  {
    int stride = 1;
    for (int k = 0; k < m; ++k) {
      strides[k] = stride;
      stride *= radices[k];
    }
  }
  for (int idx = 0; idx < total; ++idx) {
    model.decode_config(idx, config);
    for (int k = 0; k < m; ++k) {
      const Generator& gen = model.generator_for(k, config);
      const int from_state = config[k];
      gen.for_each_rate(from_state, [&](int to_state, double q) {
        entries.push_back({idx, idx + (to_state - from_state) * strides[k], q});
      });
    }
  }

  std::vector<double> pi(total, 0.0);
  if (model.initial().kind == CtbnInitial::Kind::Joint) {
    pi = model.initial().joint;
  } else {
    for (int idx = 0; idx < total; ++idx) {
      model.decode_config(idx, config);
      double w = 1.0;
      for (int k = 0; k < m; ++k) w *= model.initial().marginals[k][config[k]];
      pi[idx] = w;
    }
  }

  return FlatCtbn{Generator::sparse(total, entries),
                  InitialDistribution::normalized(std::move(pi)), std::move(radices)};
}

ObservationSet flatten_observations(const CtbnModel& model, const FlatCtbn& flat,
                                    const std::vector<ObservationSet>& per_node) {
  if (static_cast<int>(per_node.size()) != model.node_count())
    throw std::invalid_argument("need one observation set per node");
  std::vector<Observation> merged;
  std::vector<LikelihoodModel> models(per_node.size());
  for (int k = 0; k < model.node_count(); ++k) {
    if (per_node[k].empty()) continue;
    models[k] = per_node[k].model();
    for (const auto& o : per_node[k].all())
      merged.push_back({o.time, o.value, k});  // channel carries the node
  }
  const std::vector<int> radices = flat.radices;
  auto likelihood = [radices, models](int state, const Observation& o) {
    for (int j = 0; j < o.channel; ++j) state /= radices[j];
    Observation inner = o;
    inner.channel = 0;
    return models[o.channel](state % radices[o.channel], inner);
  };
  return ObservationSet(flat.generator.size(), std::move(merged), likelihood);
}

SufficientStats project_node_stats(const FlatCtbn& flat, const SufficientStats& joint, int k) {
  const int nk = flat.radices[k];
  SufficientStats out(nk);
  for (int idx = 0; idx < joint.n; ++idx)
    out.dwell[flat.node_state(idx, k)] += joint.dwell[idx];
  for (int i = 0; i < joint.n; ++i) {
    for (int j = 0; j < joint.n; ++j) {
      const double c = joint.count(i, j);
      if (c == 0.0 || i == j) continue;
      const int si = flat.node_state(i, k);
      const int sj = flat.node_state(j, k);
      if (si != sj) {
        // attribute only transitions where THIS node moved
        bool others_equal = true;
        for (std::size_t l = 0; l < flat.radices.size(); ++l) {
          if (static_cast<int>(l) == k) continue;
          if (flat.node_state(i, static_cast<int>(l)) != flat.node_state(j, static_cast<int>(l))) {
            others_equal = false;
            break;
          }
        }
        if (others_equal) out.count(si, sj) += c;
      }
    }
  }
  return out;
}

CtbnPath unflatten_path(const FlatCtbn& flat, const MjpPath& joint) {
  const int m = static_cast<int>(flat.radices.size());
  std::vector<std::vector<double>> times(m);
  std::vector<std::vector<int>> states(m);
  for (int k = 0; k < m; ++k) states[k].push_back(flat.node_state(joint.states()[0], k));
  for (int i = 0; i < joint.jump_count(); ++i) {
    const int after = joint.states()[i + 1];
    for (int k = 0; k < m; ++k) {
      const int s = flat.node_state(after, k);
      if (s != states[k].back()) {
        times[k].push_back(joint.jump_times()[i]);
        states[k].push_back(s);
      }
    }
  }
  std::vector<MjpPath> paths;
  paths.reserve(m);
  for (int k = 0; k < m; ++k)
    paths.emplace_back(joint.t_start(), joint.t_end(), std::move(times[k]),
                       std::move(states[k]));
  return CtbnPath(std::move(paths));
}

}  // namespace unipath
