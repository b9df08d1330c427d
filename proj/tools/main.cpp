#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "unipath/ctbn.hpp"
#include "unipath/diagnostics.hpp"
#include "unipath/errors.hpp"
#include "unipath/experiments.hpp"
#include "unipath/mjp_sampler.hpp"
#include "unipath/model_io.hpp"
#include "unipath/oracles.hpp"

namespace {

using namespace unipath;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitInconsistent = 3;
constexpr int kExitBudget = 4;

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

LikelihoodModel make_noise_model(const std::string& noise, int n) {
  if (noise == "noiseless") return noiseless_state_likelihood();
  if (noise.rfind("discrete:", 0) == 0) {
    try {
      return discrete_noise_likelihood(std::stod(noise.substr(9)), n);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bad noise model: ") + e.what());
    }
  }
  throw ConfigError("unknown noise model '" + noise + "' (use noiseless or discrete:EPS)");
}

std::string stats_header(const std::string& prefix, int n) {
  std::ostringstream h;
  for (int s = 0; s < n; ++s) h << "," << prefix << "dwell_" << s;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) h << "," << prefix << "jumps_" << i << "_" << j;
  return h.str();
}

void append_stats_row(std::ostringstream& out, const SufficientStats& st) {
  for (int s = 0; s < st.n; ++s) out << "," << st.dwell[s];
  for (int i = 0; i < st.n; ++i)
    for (int j = 0; j < st.n; ++j)
      if (i != j) out << "," << st.count(i, j);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<int>& grid,
                     const std::vector<double>& log_ev, const std::vector<double>& seconds) {
  std::ostringstream out;
  out << "iteration,grid_size,log_evidence,seconds\n" << std::setprecision(10);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out << i << "," << grid[i] << ",";
    if (i < log_ev.size())
      out << log_ev[i];
    out << "," << seconds[i] << "\n";
  }
  write_file(path, out.str());
}

json ess_of_traces(const std::vector<ScalarTrace>& traces) {
  json out = json::array();
  for (const auto& t : traces) out.push_back(effective_sample_size(t).value);
  return out;
}

struct MjpCliArgs {
  std::string model_file;
  std::string obs_file;
  std::string truth_file;
  std::string noise = "noiseless";
  double t_start = 0.0;
  double t_end = 1.0;
  int iterations = 2000;
  int burn_in = 200;
  std::uint64_t seed = 1;
  double omega_multiplier = 2.0;
  std::string out_dir = ".";
};

void run_mjp_cli(const MjpCliArgs& args) {
  const MjpModelFile model = load_mjp_model(args.model_file);
  const int n = model.generator.size();

  ObservationSet obs;
  if (!args.obs_file.empty())
    obs = ObservationSet(n, load_observations_csv(args.obs_file), make_noise_model(args.noise, n));

  const MjpProblem problem(model.generator, model.initial, args.t_start, args.t_end,
                           std::move(obs), UniformizationPolicy(args.omega_multiplier));

  Rng rng = derive_rng(args.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const ChainResult chain = run_chain(problem, args.iterations, args.burn_in, rng);
  const double elapsed = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0).count();

  std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);

  std::ostringstream samples;
  samples << "iteration" << stats_header("", n) << "\n" << std::setprecision(10);
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    samples << (args.burn_in + i);
    append_stats_row(samples, chain.samples[i]);
    samples << "\n";
  }
  write_file(dir / "samples.csv", samples.str());
  write_trace_csv(dir / "trace.csv", chain.grid_sizes, chain.log_evidences, chain.seconds);

  const AggregateResult agg = aggregate_stats(chain.samples);
  json summary;
  summary["iterations"] = args.iterations;
  summary["burn_in"] = args.burn_in;
  summary["seed"] = args.seed;
  summary["omega_multiplier"] = args.omega_multiplier;
  summary["elapsed_seconds"] = elapsed;
  summary["retained_samples"] = chain.samples.size();
  summary["mean_dwell"] = agg.mean.dwell;
  summary["dwell_ess"] = ess_of_traces(agg.dwell_traces);
  double mean_grid = 0.0;
  for (int g : chain.grid_sizes) mean_grid += g;
  summary["mean_grid_size"] = mean_grid / static_cast<double>(chain.grid_sizes.size());
  summary["version"] = project_version;
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  // per-statistic means and ESS, plus error against a reference when given
  json diag;
  diag["dwell"] = json::array();
  for (int s = 0; s < n; ++s)
    diag["dwell"].push_back({{"mean", agg.mean.dwell[s]},
                             {"ess", effective_sample_size(agg.dwell_traces[s]).value}});
  diag["transitions"] = json::array();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& trace = agg.count_traces[static_cast<std::size_t>(i) * n + j];
      diag["transitions"].push_back({{"from", i},
                                     {"to", j},
                                     {"mean", agg.mean.count(i, j)},
                                     {"ess", effective_sample_size(trace).value}});
    }
  if (!args.truth_file.empty()) {
    const SufficientStats truth = load_stats_json(args.truth_file);
    const AreResult are = average_relative_error(agg.mean, truth);
    diag["are"] = {{"value", are.value}, {"excluded", are.excluded}};
  }
  write_file(dir / "diagnostics.json", diag.dump(2) + "\n");
}

struct CtbnCliArgs {
  std::string model_file;
  std::string obs_file;
  std::string noise = "noiseless";
  double t_start = 0.0;
  double t_end = 1.0;
  int sweeps = 2000;
  int burn_in = 200;
  std::uint64_t seed = 1;
  double omega_multiplier = 2.0;
  std::string out_dir = ".";
};

void run_ctbn_cli(const CtbnCliArgs& args) {
  const CtbnModel model = load_ctbn_model(args.model_file);
  const int m = model.node_count();

  std::vector<ObservationSet> obs(m);
  if (!args.obs_file.empty()) {
    auto per_node = load_node_observations_csv(args.obs_file, m);
    for (int k = 0; k < m; ++k) {
      if (per_node[k].empty()) continue;
      const int nk = model.node(k).state_count;
      obs[k] = ObservationSet(nk, std::move(per_node[k]), make_noise_model(args.noise, nk));
    }
  }

  Rng rng = derive_rng(args.seed);
  const auto t0 = std::chrono::steady_clock::now();
  const CtbnChainResult chain =
      run_ctbn_chain(model, obs, args.t_start, args.t_end, args.sweeps, args.burn_in,
                     UniformizationPolicy(args.omega_multiplier), rng);
  const double elapsed = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0).count();

  std::filesystem::path dir(args.out_dir);
  std::filesystem::create_directories(dir);

  std::ostringstream samples;
  samples << "iteration";
  for (int k = 0; k < m; ++k)
    samples << stats_header("n" + std::to_string(k) + "_", model.node(k).state_count);
  samples << "\n" << std::setprecision(10);
  for (std::size_t i = 0; i < chain.samples.size(); ++i) {
    samples << (args.burn_in + i);
    for (int k = 0; k < m; ++k) append_stats_row(samples, chain.samples[i][k]);
    samples << "\n";
  }
  write_file(dir / "samples.csv", samples.str());
  write_trace_csv(dir / "trace.csv", chain.grid_sizes, chain.log_evidences, chain.seconds);

  json summary;
  summary["sweeps"] = args.sweeps;
  summary["burn_in"] = args.burn_in;
  summary["seed"] = args.seed;
  summary["omega_multiplier"] = args.omega_multiplier;
  summary["elapsed_seconds"] = elapsed;
  summary["retained_samples"] = chain.samples.size();
  summary["nodes"] = json::array();
  for (int k = 0; k < m; ++k) {
    std::vector<SufficientStats> node_samples;
    node_samples.reserve(chain.samples.size());
    for (const auto& sweep : chain.samples) node_samples.push_back(sweep[k]);
    const AggregateResult agg = aggregate_stats(node_samples);
    json jn;
    jn["name"] = model.node(k).name;
    jn["mean_dwell"] = agg.mean.dwell;
    jn["dwell_ess"] = ess_of_traces(agg.dwell_traces);
    summary["nodes"].push_back(std::move(jn));
  }
  summary["version"] = project_version;
  write_file(dir / "summary.json", summary.dump(2) + "\n");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Uniformization-based Gibbs sampling for Markov jump processes and CTBNs"};
  app.require_subcommand(1);

  // ---- mjp ----
  MjpCliArgs mjp;
  CLI::App* mjp_cmd = app.add_subcommand("mjp", "Posterior path sampling for a plain MJP");
  mjp_cmd->add_option("--model", mjp.model_file, "model JSON file")->required();
  mjp_cmd->add_option("--obs", mjp.obs_file, "observations CSV (time,payload)");
  mjp_cmd->add_option("--truth", mjp.truth_file,
                      "reference statistics JSON for the error report");
  mjp_cmd->add_option("--noise", mjp.noise, "noiseless | discrete:EPS");
  mjp_cmd->add_option("--t-start", mjp.t_start);
  mjp_cmd->add_option("--t-end", mjp.t_end)->required();
  mjp_cmd->add_option("--iterations", mjp.iterations);
  mjp_cmd->add_option("--burn-in", mjp.burn_in);
  mjp_cmd->add_option("--seed", mjp.seed);
  mjp_cmd->add_option("--omega-multiplier", mjp.omega_multiplier);
  mjp_cmd->add_option("--out", mjp.out_dir, "output directory")->required();

  // ---- ctbn ----
  CtbnCliArgs ctbn;
  CLI::App* ctbn_cmd = app.add_subcommand("ctbn", "Posterior path sampling for a CTBN");
  ctbn_cmd->add_option("--model", ctbn.model_file, "model JSON file")->required();
  ctbn_cmd->add_option("--obs", ctbn.obs_file, "observations CSV (node,time,payload)");
  ctbn_cmd->add_option("--noise", ctbn.noise, "noiseless | discrete:EPS");
  ctbn_cmd->add_option("--t-start", ctbn.t_start);
  ctbn_cmd->add_option("--t-end", ctbn.t_end)->required();
  ctbn_cmd->add_option("--sweeps", ctbn.sweeps);
  ctbn_cmd->add_option("--burn-in", ctbn.burn_in);
  ctbn_cmd->add_option("--seed", ctbn.seed);
  ctbn_cmd->add_option("--omega-multiplier", ctbn.omega_multiplier);
  ctbn_cmd->add_option("--out", ctbn.out_dir, "output directory")->required();

  // ---- oracle ----
  CLI::App* oracle_cmd = app.add_subcommand("oracle", "Exact reference computations");
  oracle_cmd->require_subcommand(1);

  std::string o_model, o_obs, o_noise = "noiseless", o_out;
  double o_t = 1.0, o_t_start = 0.0, o_t_end = 1.0, o_grid_step = 0.01;
  std::vector<double> o_times;
  int o_start_state = 0, o_end_state = 0, o_samples = 1;
  std::uint64_t o_seed = 1;
  long long o_max_attempts = 1000000;

  CLI::App* expm_cmd = oracle_cmd->add_subcommand("expm", "transition probabilities exp(A t)");
  expm_cmd->add_option("--model", o_model)->required();
  expm_cmd->add_option("--t", o_t)->required();

  CLI::App* marg_cmd = oracle_cmd->add_subcommand("marginals", "smoothed posterior marginals");
  marg_cmd->add_option("--model", o_model)->required();
  marg_cmd->add_option("--obs", o_obs);
  marg_cmd->add_option("--noise", o_noise);
  marg_cmd->add_option("--t-start", o_t_start);
  marg_cmd->add_option("--t-end", o_t_end)->required();
  marg_cmd->add_option("--times", o_times, "query times")->required();

  CLI::App* rej_cmd = oracle_cmd->add_subcommand("reject", "endpoint-conditioned rejection sampling");
  rej_cmd->add_option("--model", o_model)->required();
  rej_cmd->add_option("--start-state", o_start_state)->required();
  rej_cmd->add_option("--end-state", o_end_state)->required();
  rej_cmd->add_option("--t-start", o_t_start);
  rej_cmd->add_option("--t-end", o_t_end)->required();
  rej_cmd->add_option("--samples", o_samples);
  rej_cmd->add_option("--seed", o_seed);
  rej_cmd->add_option("--max-attempts", o_max_attempts);
  rej_cmd->add_option("--out", o_out, "directory for accepted path CSVs");

  CLI::App* stats_cmd = oracle_cmd->add_subcommand("stats", "expected sufficient statistics");
  stats_cmd->add_option("--model", o_model)->required();
  stats_cmd->add_option("--obs", o_obs);
  stats_cmd->add_option("--noise", o_noise);
  stats_cmd->add_option("--t-start", o_t_start);
  stats_cmd->add_option("--t-end", o_t_end)->required();
  stats_cmd->add_option("--grid-step", o_grid_step);
  stats_cmd->add_option("--out", o_out, "output JSON file (stdout when omitted)");

  // ---- experiments ----
  std::string e_config, e_out, e_kind;
  std::uint64_t e_seed = 1;
  CLI::App* exp_cmd = app.add_subcommand("experiments", "Config-driven studies (lv|chain|scaling)");
  exp_cmd->add_option("kind", e_kind, "lv | chain | scaling (checked against the config)")
      ->check(CLI::IsMember({"lv", "chain", "scaling"}));
  exp_cmd->add_option("--config", e_config, "experiment config JSON")->required();
  exp_cmd->add_option("--out", e_out, "output directory")->required();
  exp_cmd->add_option("--seed", e_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;  // --help exits cleanly
  }

  if (*mjp_cmd) {
    run_mjp_cli(mjp);
  } else if (*ctbn_cmd) {
    run_ctbn_cli(ctbn);
  } else if (*expm_cmd) {
    const MjpModelFile model = load_mjp_model(o_model);
    const auto p = transition_matrix(model.generator, o_t);
    std::cout << std::setprecision(12);
    for (const auto& row : p) {
      for (std::size_t j = 0; j < row.size(); ++j)
        std::cout << (j ? "," : "") << row[j];
      std::cout << "\n";
    }
  } else if (*marg_cmd) {
    const MjpModelFile model = load_mjp_model(o_model);
    ObservationSet obs;
    if (!o_obs.empty())
      obs = ObservationSet(model.generator.size(), load_observations_csv(o_obs),
                           make_noise_model(o_noise, model.generator.size()));
    const MjpProblem problem(model.generator, model.initial, o_t_start, o_t_end, std::move(obs));
    const GridPosterior post = exact_posterior_marginals(problem, o_times);
    std::cout << "time,state,probability\n" << std::setprecision(12);
    for (std::size_t i = 0; i < post.times.size(); ++i)
      for (std::size_t s = 0; s < post.marginals[i].size(); ++s)
        std::cout << post.times[i] << "," << s << "," << post.marginals[i][s] << "\n";
  } else if (*rej_cmd) {
    const MjpModelFile model = load_mjp_model(o_model);
    Rng rng = derive_rng(o_seed);
    long long total_attempts = 0;
    for (int i = 0; i < o_samples; ++i) {
      const RejectionResult r = rejection_sample_endpoint(
          model.generator, o_start_state, o_end_state, o_t_start, o_t_end, rng, o_max_attempts);
      total_attempts += r.rejections + 1;
      if (!o_out.empty()) {
        std::filesystem::create_directories(o_out);
        save_path_csv(r.path, (std::filesystem::path(o_out) /
                               ("path_" + std::to_string(i) + ".csv")).string());
      }
    }
    std::cout << std::setprecision(12) << "accepted," << o_samples << "\n"
              << "attempts," << total_attempts << "\n"
              << "acceptance_rate," << static_cast<double>(o_samples) / total_attempts << "\n";
  } else if (*stats_cmd) {
    const MjpModelFile model = load_mjp_model(o_model);
    ObservationSet obs;
    if (!o_obs.empty())
      obs = ObservationSet(model.generator.size(), load_observations_csv(o_obs),
                           make_noise_model(o_noise, model.generator.size()));
    const MjpProblem problem(model.generator, model.initial, o_t_start, o_t_end, std::move(obs));
    const SufficientStats stats = exact_sufficient_stats(problem, o_grid_step);
    if (o_out.empty()) {
      json j;
      j["dwell"] = stats.dwell;
      j["counts"] = json::array();
      for (int i = 0; i < stats.n; ++i) {
        std::vector<double> row(stats.n);
        for (int k = 0; k < stats.n; ++k) row[k] = stats.count(i, k);
        j["counts"].push_back(row);
      }
      std::cout << j.dump(2) << "\n";
    } else {
      save_stats_json(stats, o_out);
    }
  } else if (*exp_cmd) {
    run_experiment_file(e_config, e_out, e_seed, e_kind);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InconsistentEvidenceError& e) {
    std::cerr << "inconsistent evidence: " << e.what() << "\n";
    return kExitInconsistent;
  } catch (const BudgetExceededError& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
