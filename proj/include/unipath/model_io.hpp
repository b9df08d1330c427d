#pragma once

#include <string>
#include <vector>

#include "unipath/ctbn.hpp"
#include "unipath/generator.hpp"
#include "unipath/observations.hpp"
#include "unipath/path.hpp"
#include "unipath/stats.hpp"

// File formats:
//  - MJP model (JSON): {"n": int, "rates": [[from, to, rate], ...],
//    "pi": [...]} with rates listed sparsely; omitted pairs are zero and the
//    diagonal is always derived, never read. Optional "storage":
//    "dense" (default) or "sparse".
//  - CTBN model (JSON): {"nodes": [{"name", "states", "parents",
//    "rates": [sparse triplet list per parent configuration], "storage"}],
//    "initial": {"type": "product", "marginals": [...]} or
//    {"type": "joint", "table": [...]}}. Parent configurations are indexed
//    in mixed radix with the first listed parent least significant; joint
//    tables use the same encoding over all nodes with node 0 least
//    significant.
//  - Path (CSV): header `time,state`; first row at t_start, one row per jump.
//  - Observations (CSV): `time,payload` for MJPs, `node,time,payload` for
//    CTBNs.
//  - Sufficient statistics (JSON): {"dwell": [...], "counts": [[...]]}.
// All loaders throw ConfigError on malformed input.

namespace unipath {

struct MjpModelFile {
  Generator generator;
  InitialDistribution initial;
};

MjpModelFile load_mjp_model(const std::string& path);
void save_mjp_model(const Generator& generator, const InitialDistribution& initial,
                    const std::string& path);
std::string mjp_model_to_json(const Generator& generator, const InitialDistribution& initial);

CtbnModel load_ctbn_model(const std::string& path);
void save_ctbn_model(const CtbnModel& model, const std::string& path);
std::string ctbn_model_to_json(const CtbnModel& model);

std::vector<Observation> load_observations_csv(const std::string& path);
void save_observations_csv(const std::vector<Observation>& obs, const std::string& path);

// `node,time,payload` rows split per node; result has one vector per node.
std::vector<std::vector<Observation>> load_node_observations_csv(const std::string& path,
                                                                 int node_count);
void save_node_observations_csv(const std::vector<std::vector<Observation>>& per_node,
                                const std::string& path);

void save_path_csv(const MjpPath& path, const std::string& file);
MjpPath load_path_csv(const std::string& file, double t_start, double t_end);

SufficientStats load_stats_json(const std::string& path);
void save_stats_json(const SufficientStats& stats, const std::string& path);

}  // namespace unipath
