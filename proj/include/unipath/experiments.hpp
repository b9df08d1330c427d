#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unipath/ctbn.hpp"
#include "unipath/diagnostics.hpp"
#include "unipath/observations.hpp"
#include "unipath/rng.hpp"

namespace unipath {

inline constexpr const char* project_version = "0.1.0";

// Truncated predator-prey network: two nodes with populations in
// {0..cap}, prey births alpha*x and deaths beta*x*y, predator births
// delta*x*y and deaths gamma*y. Desk-scale defaults keep runs in CI
// budgets; full_scale() is the full-size configuration (cap 200, horizon 3000).
struct LotkaVolterraSpec {
  int cap = 30;
  double alpha = 5e-4;
  double beta = 1e-4;
  double gamma = 5e-4;
  double delta = 1e-4;
  double t_end = 600.0;
  int prey0 = 15;
  int predator0 = 5;
  bool observe_initial = true;            // noiseless reading at t = 0
  std::vector<double> observation_times;  // noisy readings
  double band_grid_step = 10.0;

  static LotkaVolterraSpec desk_scale();
  static LotkaVolterraSpec full_scale();
  void validate() const;
};

CtbnModel build_lotka_volterra(const LotkaVolterraSpec& spec);

// Geometric-decay count noise, normalized over the truncated state space so
// likelihood vectors are comparable across slots.
double lv_noise_likelihood(int observed, int state, int cap);
int sample_lv_noise(int state, int cap, Rng& rng);
// Observation channel 1 = noiseless reading, channel 0 = noisy count.
LikelihoodModel lv_observation_model(int cap);

// Chain topology: node 0 parentless, node k's parent is k-1. Off-diagonal
// rates are drawn uniformly from [0.5, 2] with a SplitMix64 stream in a
// fixed order (node, parent configuration, row, column), so the same
// (nodes, states, seed) reproduces the model bit-for-bit anywhere.
CtbnModel build_chain_ctbn(int nodes, int states, std::uint64_t seed);

struct SamplerSettings {
  int iterations = 2000;
  int burn_in = 200;
  double omega_multiplier = 2.0;
};

// ---- Lotka-Volterra posterior study -------------------------------------

struct LvBandPoint {
  double time;
  int node;
  double mean;
  int q05;
  int q95;
  int truth;
};

struct LvResult {
  std::vector<LvBandPoint> band;
  std::vector<std::vector<Observation>> observations;  // per node, as generated
  double observed_region_end = 0.0;
  std::vector<double> coverage_per_node;  // fraction of in-region grid points in the band
  double coverage = 0.0;                  // both nodes pooled
  std::vector<double> mean_population_ess;
  std::vector<std::vector<double>> mean_dwell;  // per node
};

LvResult run_lv_experiment(const LotkaVolterraSpec& spec, const SamplerSettings& settings,
                           std::uint64_t seed);

// ---- error-vs-samples study on a seeded chain network --------------------

struct ChainStudyConfig {
  int nodes = 3;
  int states = 3;
  double t_end = 4.0;
  int chains = 50;
  std::vector<int> sample_counts = {100, 300, 1000, 3000};
  int burn_in = 200;
  double truth_grid_step = 0.002;
  double omega_multiplier = 2.0;
  int threads = 2;
};

struct ChainStudyResult {
  std::vector<int> sample_counts;
  std::vector<double> median_are;
  std::vector<double> q25_are;
  std::vector<double> q75_are;
  std::vector<std::vector<double>> per_chain_are;  // [checkpoint][chain]
  std::vector<SufficientStats> truth_per_node;
};

ChainStudyResult run_chain_error_study(const ChainStudyConfig& config, std::uint64_t seed);

// ---- complexity scaling studies ------------------------------------------

enum class ScalingAxis { States, ChainLength, Interval };

struct ScalingConfig {
  ScalingAxis axis = ScalingAxis::States;
  std::vector<int> levels;
  bool sparse = false;   // states axis: tridiagonal birth-death vs dense random
  int nodes = 1;         // chain length when axis != ChainLength
  int states = 4;        // per-node states when axis != States
  double t_end = 10.0;
  double target_ess = 100.0;
  long long max_iterations = 200000;
  int batch = 500;
  int burn_in = 100;
  double omega_multiplier = 2.0;
  // Keep batching beyond the ESS target until this much sampling time has
  // accumulated, so per-iteration timings are not scheduler noise.
  double min_sampling_seconds = 0.0;
};

struct ScalingLevelResult {
  double level = 0.0;
  long long iterations = 0;
  double sampling_seconds = 0.0;
  double seconds_per_iteration = 0.0;       // total / iterations
  double best_seconds_per_iteration = 0.0;  // min over batches; robust to load spikes
  double mean_grid = 0.0;
  double ess = 0.0;
};

struct ScalingResult {
  std::vector<ScalingLevelResult> levels;
  double slope = 0.0;  // log-log fit of best_seconds_per_iteration vs level
};

ScalingResult run_scaling_study(const ScalingConfig& config, std::uint64_t seed);

// ---- config-file driver (CLI entry) ---------------------------------------

// Parses and validates the experiment config, runs it, and writes
// results.csv, posterior_band.csv (lv), diagnostics.json and manifest.json
// into out_dir. A nonempty `kind` must match the config's experiment.
// Throws ConfigError / InconsistentEvidenceError / BudgetExceededError for
// the CLI to map onto exit codes.
void run_experiment_file(const std::string& config_path, const std::string& out_dir,
                         std::uint64_t seed, const std::string& kind = "");

}  // namespace unipath
