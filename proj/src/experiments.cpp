#include "unipath/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "unipath/errors.hpp"
#include "unipath/mjp_sampler.hpp"
#include "unipath/model_io.hpp"
#include "unipath/oracles.hpp"

namespace unipath {

using nlohmann::json;

LotkaVolterraSpec LotkaVolterraSpec::desk_scale() {
  LotkaVolterraSpec spec;
  // Observations cover the first half of the interval only; the late
  // region stays data-free so the posterior has to widen back to the prior.
  spec.observation_times = {50, 100, 150, 200, 250, 300};
  return spec;
}

LotkaVolterraSpec LotkaVolterraSpec::full_scale() {
  LotkaVolterraSpec spec;
  spec.cap = 200;
  spec.t_end = 3000.0;
  spec.prey0 = 100;
  spec.predator0 = 100;
  spec.band_grid_step = 30.0;
  for (int i = 1; i <= 15; ++i) spec.observation_times.push_back(100.0 * i);
  return spec;
}

void LotkaVolterraSpec::validate() const {
  if (cap < 1) throw ConfigError("lv: cap must be >= 1");
  if (alpha < 0 || beta < 0 || gamma < 0 || delta < 0)
    throw ConfigError("lv: rates must be nonnegative");
  if (!(t_end > 0)) throw ConfigError("lv: t_end must be positive");
  if (prey0 < 0 || prey0 > cap || predator0 < 0 || predator0 > cap)
    throw ConfigError("lv: initial populations must lie in [0, cap]");
  if (!(band_grid_step > 0)) throw ConfigError("lv: band_grid_step must be positive");
  for (double t : observation_times)
    if (!(t > 0) || t > t_end) throw ConfigError("lv: observation times must lie in (0, t_end]");
}

CtbnModel build_lotka_volterra(const LotkaVolterraSpec& spec) {
  spec.validate();
  const int n = spec.cap + 1;

  CtbnNode prey;
  prey.name = "prey";
  prey.state_count = n;
  prey.parents = {1};
  for (int y = 0; y < n; ++y) {
    std::vector<RateEntry> entries;
    for (int x = 0; x < n; ++x) {
      if (x + 1 < n) entries.push_back({x, x + 1, spec.alpha * x});
      if (x - 1 >= 0) entries.push_back({x, x - 1, spec.beta * x * y});
    }
    prey.rate_table.push_back(Generator::sparse(n, entries));
  }

  CtbnNode predator;
  predator.name = "predator";
  predator.state_count = n;
  predator.parents = {0};
  for (int x = 0; x < n; ++x) {
    std::vector<RateEntry> entries;
    for (int y = 0; y < n; ++y) {
      if (y + 1 < n) entries.push_back({y, y + 1, spec.delta * x * y});
      if (y - 1 >= 0) entries.push_back({y, y - 1, spec.gamma * y});
    }
    predator.rate_table.push_back(Generator::sparse(n, entries));
  }

  std::vector<InitialDistribution> init{InitialDistribution::point_mass(n, spec.prey0),
                                        InitialDistribution::point_mass(n, spec.predator0)};
  std::vector<CtbnNode> nodes;
  nodes.push_back(std::move(prey));
  nodes.push_back(std::move(predator));
  return CtbnModel(std::move(nodes), CtbnInitial::product(std::move(init)));
}

namespace {

double lv_noise_weight(int observed, int state) {
  return 1.0 / (std::exp2(std::abs(observed - state)) + 1e-6);
}

}  // namespace

double lv_noise_likelihood(int observed, int state, int cap) {
  if (observed < 0 || observed > cap || state < 0 || state > cap)
    throw std::invalid_argument("count outside [0, cap]");
  double total = 0.0;
  for (int s = 0; s <= cap; ++s) total += lv_noise_weight(observed, s);
  return lv_noise_weight(observed, state) / total;
}

int sample_lv_noise(int state, int cap, Rng& rng) {
  std::vector<double> w(cap + 1);
  double total = 0.0;
  for (int x = 0; x <= cap; ++x) {
    w[x] = lv_noise_weight(x, state);
    total += w[x];
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return sample_categorical(w, total, unif(rng));
}

LikelihoodModel lv_observation_model(int cap) {
  return [cap](int state, const Observation& o) {
    if (o.channel == 1) return state == static_cast<int>(o.value) ? 1.0 : 0.0;
    return lv_noise_likelihood(static_cast<int>(o.value), state, cap);
  };
}

CtbnModel build_chain_ctbn(int nodes, int states, std::uint64_t seed) {
  if (nodes < 1 || states < 2)
    throw std::invalid_argument("chain needs nodes >= 1 and states >= 2");
  std::uint64_t stream = seed;
  std::vector<CtbnNode> spec_nodes;
  std::vector<InitialDistribution> init;
  for (int k = 0; k < nodes; ++k) {
    CtbnNode node;
    node.name = "node" + std::to_string(k);
    node.state_count = states;
    if (k > 0) node.parents = {k - 1};
    const int configs = k > 0 ? states : 1;
    for (int c = 0; c < configs; ++c) {
      std::vector<RateEntry> entries;
      for (int i = 0; i < states; ++i)
        for (int j = 0; j < states; ++j) {
          if (i == j) continue;
          entries.push_back({i, j, 0.5 + 1.5 * splitmix_unit(stream)});
        }
      node.rate_table.push_back(Generator::dense(states, entries));
    }
    spec_nodes.push_back(std::move(node));
    init.push_back(InitialDistribution::uniform(states));
  }
  return CtbnModel(std::move(spec_nodes), CtbnInitial::product(std::move(init)));
}

// ---- Lotka-Volterra -------------------------------------------------------

LvResult run_lv_experiment(const LotkaVolterraSpec& spec, const SamplerSettings& settings,
                           std::uint64_t seed) {
  const CtbnModel model = build_lotka_volterra(spec);
  const int n = spec.cap + 1;
  Rng rng = derive_rng(seed, 7);

  const CtbnPath truth = sample_ctbn_prior(model, 0.0, spec.t_end, rng);

  LvResult result;
  result.observations.resize(2);
  std::vector<ObservationSet> obs_sets;
  for (int k = 0; k < 2; ++k) {
    std::vector<Observation> obs;
    if (spec.observe_initial)
      obs.push_back({0.0, static_cast<double>(truth.node(k).states()[0]), 1});
    for (double t : spec.observation_times)
      obs.push_back({t, static_cast<double>(sample_lv_noise(truth.node(k).state_at(t), spec.cap, rng)), 0});
    result.observations[k] = obs;
    obs_sets.emplace_back(n, std::move(obs), lv_observation_model(spec.cap));
  }
  result.observed_region_end =
      spec.observation_times.empty()
          ? (spec.observe_initial ? 0.0 : -1.0)
          : *std::max_element(spec.observation_times.begin(), spec.observation_times.end());

  std::vector<double> grid;
  for (double t = 0.0; t < spec.t_end; t += spec.band_grid_step) grid.push_back(t);
  grid.push_back(spec.t_end);

  // state histogram per (node, grid time) plus a mean-population trace
  std::vector<std::vector<std::vector<long long>>> hist(
      2, std::vector<std::vector<long long>>(grid.size(), std::vector<long long>(n, 0)));
  std::vector<ScalarTrace> pop_trace(2);
  std::vector<std::vector<double>> dwell_sum(2, std::vector<double>(n, 0.0));
  long long retained = 0;

  run_ctbn_chain_stream(
      model, obs_sets, 0.0, spec.t_end, settings.iterations, settings.burn_in,
      UniformizationPolicy(settings.omega_multiplier), rng,
      [&](const CtbnPath& path, const GibbsInfo&, int sweep) {
        if (sweep < settings.burn_in) return;
        ++retained;
        for (int k = 0; k < 2; ++k) {
          for (std::size_t g = 0; g < grid.size(); ++g)
            ++hist[k][g][path.node(k).state_at(grid[g])];
          const SufficientStats st = sufficient_stats(path.node(k), n);
          double mean_pop = 0.0;
          for (int s = 0; s < n; ++s) {
            mean_pop += s * st.dwell[s];
            dwell_sum[k][s] += st.dwell[s];
          }
          pop_trace[k].push_back(mean_pop / spec.t_end);
        }
      });

  result.coverage_per_node.assign(2, 0.0);
  int pooled_covered = 0;
  int pooled_total = 0;
  for (int k = 0; k < 2; ++k) {
    int covered = 0;
    int total = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto& h = hist[k][g];
      double mean = 0.0;
      long long mass = 0;
      for (int s = 0; s < n; ++s) {
        mean += static_cast<double>(h[s]) * s;
        mass += h[s];
      }
      mean /= static_cast<double>(mass);
      int q05 = 0, q95 = n - 1;
      long long cum = 0;
      for (int s = 0; s < n; ++s) {
        cum += h[s];
        if (cum >= static_cast<long long>(std::ceil(0.05 * mass))) {
          q05 = s;
          break;
        }
      }
      cum = 0;
      for (int s = 0; s < n; ++s) {
        cum += h[s];
        if (cum >= static_cast<long long>(std::ceil(0.95 * mass))) {
          q95 = s;
          break;
        }
      }
      const int true_state = truth.node(k).state_at(grid[g]);
      result.band.push_back({grid[g], k, mean, q05, q95, true_state});
      if (grid[g] <= result.observed_region_end) {
        ++total;
        if (true_state >= q05 && true_state <= q95) ++covered;
      }
    }
    result.coverage_per_node[k] = total > 0 ? static_cast<double>(covered) / total : 1.0;
    pooled_covered += covered;
    pooled_total += total;
    result.mean_population_ess.push_back(effective_sample_size(pop_trace[k]).value);
    std::vector<double> mean_dwell(n);
    for (int s = 0; s < n; ++s) mean_dwell[s] = dwell_sum[k][s] / static_cast<double>(retained);
    result.mean_dwell.push_back(std::move(mean_dwell));
  }
  result.coverage = pooled_total > 0 ? static_cast<double>(pooled_covered) / pooled_total : 1.0;
  return result;
}

// ---- chain error study ----------------------------------------------------

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

}  // namespace

ChainStudyResult run_chain_error_study(const ChainStudyConfig& config, std::uint64_t seed) {
  if (config.nodes < 1 || config.states < 2 || config.chains < 1 ||
      config.sample_counts.empty() || !(config.t_end > 0))
    throw ConfigError("chain study: bad configuration");
  for (std::size_t i = 1; i < config.sample_counts.size(); ++i)
    if (config.sample_counts[i] <= config.sample_counts[i - 1])
      throw ConfigError("chain study: sample counts must increase");

  const CtbnModel model = build_chain_ctbn(config.nodes, config.states, seed);
  const int m = config.nodes;

  // Truth path fixes the endpoint observations; the exact posterior
  // statistics come from the flattened joint process.
  Rng truth_rng = derive_rng(seed, 11);
  const CtbnPath truth_path = sample_ctbn_prior(model, 0.0, config.t_end, truth_rng);
  std::vector<ObservationSet> obs_sets;
  for (int k = 0; k < m; ++k) {
    std::vector<Observation> obs{
        {0.0, static_cast<double>(truth_path.node(k).states()[0]), 0},
        {config.t_end, static_cast<double>(truth_path.node(k).state_at(config.t_end)), 0}};
    obs_sets.emplace_back(config.states, std::move(obs), noiseless_state_likelihood());
  }

  const FlatCtbn flat = flatten_ctbn(model);
  const MjpProblem flat_problem(flat.generator, flat.initial, 0.0, config.t_end,
                                flatten_observations(model, flat, obs_sets));
  const SufficientStats joint_truth = exact_sufficient_stats(flat_problem, config.truth_grid_step);

  ChainStudyResult result;
  result.sample_counts = config.sample_counts;
  for (int k = 0; k < m; ++k)
    result.truth_per_node.push_back(project_node_stats(flat, joint_truth, k));

  const int total_sweeps = config.burn_in + config.sample_counts.back();
  const int checkpoints = static_cast<int>(config.sample_counts.size());
  result.per_chain_are.assign(checkpoints, std::vector<double>(config.chains, 0.0));

  auto run_one_chain = [&](int chain) {
    Rng rng = derive_rng(seed, 13, static_cast<std::uint64_t>(chain));
    std::vector<SufficientStats> running(m, SufficientStats(config.states));
    long long count = 0;
    int next_checkpoint = 0;
    run_ctbn_chain_stream(
        model, obs_sets, 0.0, config.t_end, total_sweeps, config.burn_in,
        UniformizationPolicy(config.omega_multiplier), rng,
        [&](const CtbnPath& path, const GibbsInfo&, int sweep) {
          if (sweep < config.burn_in) return;
          ++count;
          for (int k = 0; k < m; ++k) {
            const SufficientStats st = sufficient_stats(path.node(k), config.states);
            for (int s = 0; s < config.states; ++s) running[k].dwell[s] += st.dwell[s];
            for (std::size_t i = 0; i < st.counts.size(); ++i)
              running[k].counts[i] += st.counts[i];
          }
          while (next_checkpoint < checkpoints &&
                 count == config.sample_counts[next_checkpoint]) {
            double are = 0.0;
            for (int k = 0; k < m; ++k) {
              SufficientStats mean(config.states);
              for (int s = 0; s < config.states; ++s)
                mean.dwell[s] = running[k].dwell[s] / static_cast<double>(count);
              for (std::size_t i = 0; i < mean.counts.size(); ++i)
                mean.counts[i] = running[k].counts[i] / static_cast<double>(count);
              are += average_relative_error(mean, result.truth_per_node[k]).value;
            }
            result.per_chain_are[next_checkpoint][chain] = are;
            ++next_checkpoint;
          }
        });
  };

  const int workers = std::max(1, config.threads);
  for (int base = 0; base < config.chains; base += workers) {
    std::vector<std::future<void>> futures;
    for (int c = base; c < std::min(base + workers, config.chains); ++c)
      futures.push_back(std::async(std::launch::async, run_one_chain, c));
    for (auto& f : futures) f.get();
  }

  for (int cp = 0; cp < checkpoints; ++cp) {
    result.median_are.push_back(median_of(result.per_chain_are[cp]));
    result.q25_are.push_back(quantile_of(result.per_chain_are[cp], 0.25));
    result.q75_are.push_back(quantile_of(result.per_chain_are[cp], 0.75));
  }
  return result;
}

// ---- scaling studies ------------------------------------------------------

namespace {

Generator random_dense_generator(int n, std::uint64_t& stream) {
  std::vector<RateEntry> entries;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      entries.push_back({i, j, (0.5 + 1.5 * splitmix_unit(stream)) / (n - 1)});
    }
  return Generator::dense(n, entries);
}

Generator random_birth_death_generator(int n, std::uint64_t& stream) {
  std::vector<RateEntry> entries;
  for (int i = 0; i < n; ++i) {
    if (i + 1 < n) entries.push_back({i, i + 1, 0.5 + 1.5 * splitmix_unit(stream)});
    if (i - 1 >= 0) entries.push_back({i, i - 1, 0.5 + 1.5 * splitmix_unit(stream)});
  }
  return Generator::sparse(n, entries);
}

// Time-averaged state index; the ESS trace statistic. Computed directly
// from the path so the timed step stays sampler-dominated.
double mean_state_dwell(const MjpPath& path) {
  double v = 0.0;
  double prev = path.t_start();
  for (int i = 0; i < path.jump_count(); ++i) {
    v += path.states()[i] * (path.jump_times()[i] - prev);
    prev = path.jump_times()[i];
  }
  v += path.states().back() * (path.t_end() - prev);
  return v / path.length();
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Runs batches of one chain until the ESS target on a scalar statistic is
// reached. `step` advances the chain one iteration and returns the
// statistic and grid size; only `step` calls are timed.
ScalingLevelResult run_until_ess(double level, const ScalingConfig& config,
                                 const std::function<std::pair<double, int>()>& step) {
  ScalingLevelResult out;
  out.level = level;
  for (int i = 0; i < config.burn_in; ++i) step();

  ScalarTrace trace;
  double grid_total = 0.0;
  double best_batch = std::numeric_limits<double>::infinity();
  int batches = 0;
  while (true) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < config.batch; ++i) {
      const auto [stat, grid] = step();
      trace.push_back(stat);
      grid_total += grid;
    }
    const double batch_seconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    out.sampling_seconds += batch_seconds;
    best_batch = std::min(best_batch, batch_seconds);
    out.iterations += config.batch;
    ++batches;
    if (out.iterations > config.max_iterations)
      throw BudgetExceededError("scaling study iteration cap exceeded before reaching the ESS target");
    const EssResult ess = effective_sample_size(trace);
    out.ess = ess.value;
    if (ess.value >= config.target_ess && batches >= 3 &&
        out.sampling_seconds >= config.min_sampling_seconds)
      break;
  }
  out.seconds_per_iteration = out.sampling_seconds / static_cast<double>(out.iterations);
  out.best_seconds_per_iteration = best_batch / static_cast<double>(config.batch);
  out.mean_grid = grid_total / static_cast<double>(out.iterations);
  return out;
}

ScalingLevelResult run_mjp_level(double level, int n, double t_end,
                                 const ScalingConfig& config, std::uint64_t seed,
                                 std::uint64_t stream_tag) {
  std::uint64_t model_stream = seed ^ 0x5bd1e995u;
  const Generator gen = config.sparse ? random_birth_death_generator(n, model_stream)
                                      : random_dense_generator(n, model_stream);
  Rng rng = derive_rng(seed, stream_tag, static_cast<std::uint64_t>(level));

  const InitialDistribution pi = InitialDistribution::uniform(n);
  const MjpPath truth = sample_prior_path(gen, pi, 0.0, t_end, rng);
  ObservationSet obs(n, {{t_end, static_cast<double>(truth.state_at(t_end)), 0}},
                     noiseless_state_likelihood());
  const MjpProblem problem(gen, pi, 0.0, t_end, std::move(obs),
                           UniformizationPolicy(config.omega_multiplier));

  const TransitionKernel kernel = build_kernel(gen, problem.policy.omega_for(gen));
  MjpPath current = sample_prior_path(gen, pi, 0.0, t_end, rng);
  GibbsInfo info;
  auto step = [&]() {
    current = gibbs_step(problem, current, rng, &info, &kernel);
    return std::make_pair(mean_state_dwell(current), info.grid_size);
  };
  return run_until_ess(level, config, step);
}

ScalingLevelResult run_ctbn_level(double level, int nodes, int states, double t_end,
                                  const ScalingConfig& config, std::uint64_t seed,
                                  std::uint64_t stream_tag) {
  const CtbnModel model = build_chain_ctbn(nodes, states, seed);
  Rng rng = derive_rng(seed, stream_tag, static_cast<std::uint64_t>(level));

  const CtbnPath truth = sample_ctbn_prior(model, 0.0, t_end, rng);
  std::vector<ObservationSet> obs_sets;
  for (int k = 0; k < nodes; ++k)
    obs_sets.emplace_back(
        states,
        std::vector<Observation>{{t_end, static_cast<double>(truth.node(k).state_at(t_end)), 0}},
        noiseless_state_likelihood());

  const UniformizationPolicy policy(config.omega_multiplier);
  CtbnPath current = sample_ctbn_prior(model, 0.0, t_end, rng);
  GibbsInfo info;
  auto step = [&]() {
    current = ctbn_gibbs_sweep(model, current, obs_sets, policy, rng, &info);
    return std::make_pair(mean_state_dwell(current.node(0)), info.grid_size);
  };
  return run_until_ess(level, config, step);
}

}  // namespace

ScalingResult run_scaling_study(const ScalingConfig& config, std::uint64_t seed) {
  if (config.levels.empty()) throw ConfigError("scaling study: levels must be nonempty");
  for (int level : config.levels)
    if (level < 1) throw ConfigError("scaling study: levels must be positive");
  if (!(config.target_ess >= 10)) throw ConfigError("scaling study: target ESS too small");

  ScalingResult result;
  for (std::size_t i = 0; i < config.levels.size(); ++i) {
    const int level = config.levels[i];
    switch (config.axis) {
      case ScalingAxis::States:
        if (level < 2) throw ConfigError("states axis: levels must be >= 2");
        if (config.nodes == 1)
          result.levels.push_back(run_mjp_level(level, level, config.t_end, config, seed, 1));
        else
          result.levels.push_back(
              run_ctbn_level(level, config.nodes, level, config.t_end, config, seed, 1));
        break;
      case ScalingAxis::ChainLength:
        result.levels.push_back(
            run_ctbn_level(level, level, config.states, config.t_end, config, seed, 2));
        break;
      case ScalingAxis::Interval:
        if (config.nodes == 1)
          result.levels.push_back(run_mjp_level(level, config.states, level, config, seed, 3));
        else
          result.levels.push_back(
              run_ctbn_level(level, config.nodes, config.states, level, config, seed, 3));
        break;
    }
  }
  std::vector<double> x, y;
  for (const auto& r : result.levels) {
    x.push_back(r.level);
    y.push_back(r.best_seconds_per_iteration);
  }
  result.slope = fit_loglog_slope(x, y);
  return result;
}

// ---- config-file driver ---------------------------------------------------

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json require_object(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_object())
    throw ConfigError("config: missing object '" + key + "'");
  return j[key];
}

void write_manifest(const std::filesystem::path& dir, const json& config, std::uint64_t seed) {
  json manifest;
  manifest["config"] = config;
  manifest["seed"] = seed;
  manifest["version"] = project_version;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

void emit_lv(const LotkaVolterraSpec& spec, const SamplerSettings& settings,
             std::uint64_t seed, const std::filesystem::path& dir) {
  const LvResult r = run_lv_experiment(spec, settings, seed);

  std::ostringstream band;
  band << "time,node,mean,q05,q95,truth\n" << std::setprecision(10);
  for (const auto& p : r.band)
    band << p.time << "," << p.node << "," << p.mean << "," << p.q05 << "," << p.q95 << ","
         << p.truth << "\n";
  write_file(dir / "posterior_band.csv", band.str());

  std::ostringstream results;
  results << "node,coverage,observed_region_end\n" << std::setprecision(10);
  for (std::size_t k = 0; k < r.coverage_per_node.size(); ++k)
    results << k << "," << r.coverage_per_node[k] << "," << r.observed_region_end << "\n";
  write_file(dir / "results.csv", results.str());

  json diag;
  diag["coverage"] = r.coverage;
  diag["coverage_per_node"] = r.coverage_per_node;
  diag["mean_population_ess"] = r.mean_population_ess;
  diag["mean_dwell"] = r.mean_dwell;
  write_file(dir / "diagnostics.json", diag.dump(2) + "\n");
}

void emit_chain(const ChainStudyConfig& config, std::uint64_t seed,
                const std::filesystem::path& dir) {
  const ChainStudyResult r = run_chain_error_study(config, seed);

  std::ostringstream results;
  results << "sample_count,median_are,q25_are,q75_are\n" << std::setprecision(10);
  for (std::size_t i = 0; i < r.sample_counts.size(); ++i)
    results << r.sample_counts[i] << "," << r.median_are[i] << "," << r.q25_are[i] << ","
            << r.q75_are[i] << "\n";
  write_file(dir / "results.csv", results.str());

  json diag;
  diag["sample_counts"] = r.sample_counts;
  diag["median_are"] = r.median_are;
  diag["per_chain_are"] = r.per_chain_are;
  write_file(dir / "diagnostics.json", diag.dump(2) + "\n");
}

void emit_scaling(const ScalingConfig& config, std::uint64_t seed,
                  const std::filesystem::path& dir) {
  const ScalingResult r = run_scaling_study(config, seed);

  std::ostringstream results;
  results << "level,iterations,sampling_seconds,seconds_per_iteration,"
             "best_seconds_per_iteration,mean_grid,ess\n"
          << std::setprecision(10);
  for (const auto& l : r.levels)
    results << l.level << "," << l.iterations << "," << l.sampling_seconds << ","
            << l.seconds_per_iteration << "," << l.best_seconds_per_iteration << ","
            << l.mean_grid << "," << l.ess << "\n";
  write_file(dir / "results.csv", results.str());

  json diag;
  diag["slope"] = r.slope;
  diag["sparse"] = config.sparse;
  write_file(dir / "diagnostics.json", diag.dump(2) + "\n");
}

}  // namespace

void run_experiment_file(const std::string& config_path, const std::string& out_dir,
                         std::uint64_t seed, const std::string& kind) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open " + config_path);
  json config;
  try {
    config = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(config_path + std::string(": ") + e.what());
  }
  if (!config.contains("experiment") || !config["experiment"].is_string())
    throw ConfigError("config: missing 'experiment'");
  const std::string experiment = config["experiment"].get<std::string>();
  if (!kind.empty() && kind != experiment)
    throw ConfigError("config declares experiment '" + experiment +
                      "' but the command line asked for '" + kind + "'");

  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + out_dir);

  if (experiment == "lv") {
    const json jl = require_object(config, "lv");
    LotkaVolterraSpec spec = jl.value("preset", std::string()) == "full"
                                 ? LotkaVolterraSpec::full_scale()
                                 : LotkaVolterraSpec::desk_scale();
    spec.cap = jl.value("cap", spec.cap);
    spec.alpha = jl.value("alpha", spec.alpha);
    spec.beta = jl.value("beta", spec.beta);
    spec.gamma = jl.value("gamma", spec.gamma);
    spec.delta = jl.value("delta", spec.delta);
    spec.t_end = jl.value("t_end", spec.t_end);
    spec.prey0 = jl.value("prey0", spec.prey0);
    spec.predator0 = jl.value("predator0", spec.predator0);
    spec.observe_initial = jl.value("observe_initial", spec.observe_initial);
    if (jl.contains("observation_times"))
      spec.observation_times = jl["observation_times"].get<std::vector<double>>();
    spec.band_grid_step = jl.value("band_grid_step", spec.band_grid_step);
    spec.validate();

    SamplerSettings settings;
    const json js = require_object(config, "sampler");
    settings.iterations = js.value("iterations", settings.iterations);
    settings.burn_in = js.value("burn_in", settings.burn_in);
    settings.omega_multiplier = js.value("omega_multiplier", settings.omega_multiplier);
    if (settings.iterations <= settings.burn_in || settings.burn_in < 0)
      throw ConfigError("sampler: need iterations > burn_in >= 0");

    emit_lv(spec, settings, seed, dir);
  } else if (experiment == "chain") {
    const json jc = require_object(config, "chain");
    ChainStudyConfig cc;
    cc.nodes = jc.value("nodes", cc.nodes);
    cc.states = jc.value("states", cc.states);
    cc.t_end = jc.value("t_end", cc.t_end);
    cc.chains = jc.value("chains", cc.chains);
    if (jc.contains("sample_counts"))
      cc.sample_counts = jc["sample_counts"].get<std::vector<int>>();
    cc.burn_in = jc.value("burn_in", cc.burn_in);
    cc.truth_grid_step = jc.value("truth_grid_step", cc.truth_grid_step);
    cc.omega_multiplier = jc.value("omega_multiplier", cc.omega_multiplier);
    cc.threads = jc.value("threads", cc.threads);
    emit_chain(cc, seed, dir);
  } else if (experiment == "scaling") {
    const json jsc = require_object(config, "scaling");
    ScalingConfig sc;
    const std::string axis = jsc.value("axis", std::string("states"));
    if (axis == "states")
      sc.axis = ScalingAxis::States;
    else if (axis == "chain-length")
      sc.axis = ScalingAxis::ChainLength;
    else if (axis == "interval")
      sc.axis = ScalingAxis::Interval;
    else
      throw ConfigError("scaling: axis must be states|chain-length|interval");
    if (!jsc.contains("levels")) throw ConfigError("scaling: missing levels");
    sc.levels = jsc["levels"].get<std::vector<int>>();
    sc.sparse = jsc.value("sparse", sc.sparse);
    sc.nodes = jsc.value("nodes", sc.nodes);
    sc.states = jsc.value("states", sc.states);
    sc.t_end = jsc.value("t_end", sc.t_end);
    sc.target_ess = jsc.value("target_ess", sc.target_ess);
    sc.max_iterations = jsc.value("max_iterations", sc.max_iterations);
    sc.batch = jsc.value("batch", sc.batch);
    sc.burn_in = jsc.value("burn_in", sc.burn_in);
    sc.omega_multiplier = jsc.value("omega_multiplier", sc.omega_multiplier);
    sc.min_sampling_seconds = jsc.value("min_sampling_seconds", sc.min_sampling_seconds);
    emit_scaling(sc, seed, dir);
  } else {
    throw ConfigError("config: unknown experiment '" + experiment + "'");
  }
  write_manifest(dir, config, seed);
}

}  // namespace unipath
