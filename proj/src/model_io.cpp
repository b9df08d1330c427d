#include "unipath/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "unipath/errors.hpp"

namespace unipath {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ConfigError("failed writing " + path);
}

std::vector<RateEntry> parse_rate_triplets(const json& rates, const std::string& where) {
  std::vector<RateEntry> entries;
  if (!rates.is_array()) throw ConfigError(where + ": rates must be an array of triplets");
  for (const auto& triplet : rates) {
    if (!triplet.is_array() || triplet.size() != 3)
      throw ConfigError(where + ": each rate entry must be [from, to, rate]");
    entries.push_back({triplet[0].get<int>(), triplet[1].get<int>(), triplet[2].get<double>()});
  }
  return entries;
}

Generator build_generator(int n, const std::vector<RateEntry>& entries, bool sparse,
                          const std::string& where) {
  try {
    return sparse ? Generator::sparse(n, entries) : Generator::dense(n, entries);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

json rate_triplets(const Generator& g) {
  json rates = json::array();
  for (int i = 0; i < g.size(); ++i)
    g.for_each_rate(i, [&](int j, double q) { rates.push_back(json::array({i, j, q})); });
  return rates;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError(where + ": trailing characters in '" + s + "'");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(where + ": cannot parse number '" + s + "'");
  }
}

}  // namespace

MjpModelFile load_mjp_model(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.contains("n") || !j.contains("rates") || !j.contains("pi"))
    throw ConfigError(path + ": model needs n, rates, pi");
  const int n = j["n"].get<int>();
  const bool sparse = j.value("storage", std::string("dense")) == "sparse";
  Generator g = build_generator(n, parse_rate_triplets(j["rates"], path), sparse, path);
  std::vector<double> pi = j["pi"].get<std::vector<double>>();
  try {
    return {std::move(g), InitialDistribution(std::move(pi))};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string mjp_model_to_json(const Generator& generator, const InitialDistribution& initial) {
  json j;
  j["n"] = generator.size();
  j["rates"] = rate_triplets(generator);
  j["pi"] = std::vector<double>(initial.weights().begin(), initial.weights().end());
  if (generator.is_sparse()) j["storage"] = "sparse";
  return j.dump(2) + "\n";
}

void save_mjp_model(const Generator& generator, const InitialDistribution& initial,
                    const std::string& path) {
  write_text_file(path, mjp_model_to_json(generator, initial));
}

CtbnModel load_ctbn_model(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.contains("nodes") || !j.contains("initial"))
    throw ConfigError(path + ": model needs nodes and initial");

  std::vector<CtbnNode> nodes;
  for (const auto& jn : j["nodes"]) {
    CtbnNode node;
    node.name = jn.value("name", "node" + std::to_string(nodes.size()));
    if (!jn.contains("states") || !jn.contains("rates"))
      throw ConfigError(path + ": each node needs states and rates");
    node.state_count = jn["states"].get<int>();
    node.parents = jn.value("parents", std::vector<int>{});
    const bool sparse = jn.value("storage", std::string("dense")) == "sparse";
    for (const auto& table : jn["rates"])
      node.rate_table.push_back(build_generator(
          node.state_count, parse_rate_triplets(table, path), sparse, path));
    nodes.push_back(std::move(node));
  }

  const json& ji = j["initial"];
  const std::string type = ji.value("type", std::string());
  try {
    CtbnInitial initial;
    if (type == "product") {
      std::vector<InitialDistribution> marginals;
      for (const auto& m : ji.at("marginals"))
        marginals.emplace_back(m.get<std::vector<double>>());
      initial = CtbnInitial::product(std::move(marginals));
    } else if (type == "joint") {
      initial = CtbnInitial::joint_table(ji.at("table").get<std::vector<double>>());
    } else {
      throw ConfigError(path + ": initial type must be 'product' or 'joint'");
    }
    return CtbnModel(std::move(nodes), std::move(initial));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string ctbn_model_to_json(const CtbnModel& model) {
  json j;
  j["nodes"] = json::array();
  for (int k = 0; k < model.node_count(); ++k) {
    const CtbnNode& node = model.node(k);
    json jn;
    jn["name"] = node.name;
    jn["states"] = node.state_count;
    jn["parents"] = node.parents;
    if (!node.rate_table.empty() && node.rate_table.front().is_sparse())
      jn["storage"] = "sparse";
    jn["rates"] = json::array();
    for (const Generator& g : node.rate_table) jn["rates"].push_back(rate_triplets(g));
    j["nodes"].push_back(std::move(jn));
  }
  const CtbnInitial& init = model.initial();
  if (init.kind == CtbnInitial::Kind::Product) {
    j["initial"]["type"] = "product";
    j["initial"]["marginals"] = json::array();
    for (const auto& m : init.marginals)
      j["initial"]["marginals"].push_back(
          std::vector<double>(m.weights().begin(), m.weights().end()));
  } else {
    j["initial"]["type"] = "joint";
    j["initial"]["table"] = init.joint;
  }
  return j.dump(2) + "\n";
}

void save_ctbn_model(const CtbnModel& model, const std::string& path) {
  write_text_file(path, ctbn_model_to_json(model));
}

std::vector<Observation> load_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"time", "payload"})
    throw ConfigError(path + ": expected header 'time,payload'");
  std::vector<Observation> obs;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) throw ConfigError(path + ": row " + std::to_string(row));
    const std::string where = path + ":" + std::to_string(row);
    obs.push_back({parse_double(fields[0], where), parse_double(fields[1], where), 0});
  }
  return obs;
}

void save_observations_csv(const std::vector<Observation>& obs, const std::string& path) {
  std::ostringstream out;
  out << "time,payload\n" << std::setprecision(17);
  for (const auto& o : obs) out << o.time << "," << o.value << "\n";
  write_text_file(path, out.str());
}

std::vector<std::vector<Observation>> load_node_observations_csv(const std::string& path,
                                                                 int node_count) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"node", "time", "payload"})
    throw ConfigError(path + ": expected header 'node,time,payload'");
  std::vector<std::vector<Observation>> per_node(node_count);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw ConfigError(path + ": row " + std::to_string(row));
    const std::string where = path + ":" + std::to_string(row);
    const double node_field = parse_double(fields[0], where);
    const int node = static_cast<int>(node_field);
    if (node < 0 || node >= node_count || node != node_field)
      throw ConfigError(where + ": node index out of range");
    per_node[node].push_back(
        {parse_double(fields[1], where), parse_double(fields[2], where), 0});
  }
  return per_node;
}

void save_node_observations_csv(const std::vector<std::vector<Observation>>& per_node,
                                const std::string& path) {
  std::ostringstream out;
  out << "node,time,payload\n" << std::setprecision(17);
  for (std::size_t k = 0; k < per_node.size(); ++k)
    for (const auto& o : per_node[k]) out << k << "," << o.time << "," << o.value << "\n";
  write_text_file(path, out.str());
}

void save_path_csv(const MjpPath& path, const std::string& file) {
  std::ostringstream out;
  out << "time,state\n" << std::setprecision(17);
  out << path.t_start() << "," << path.states()[0] << "\n";
  for (int i = 0; i < path.jump_count(); ++i)
    out << path.jump_times()[i] << "," << path.states()[i + 1] << "\n";
  write_text_file(file, out.str());
}

MjpPath load_path_csv(const std::string& file, double t_start, double t_end) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"time", "state"})
    throw ConfigError(file + ": expected header 'time,state'");
  std::vector<double> times;
  std::vector<int> states;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) throw ConfigError(file + ": row " + std::to_string(row));
    const std::string where = file + ":" + std::to_string(row);
    const double t = parse_double(fields[0], where);
    const double s = parse_double(fields[1], where);
    if (states.empty()) {
      if (t != t_start) throw ConfigError(file + ": first row must be at t_start");
    } else {
      times.push_back(t);
    }
    states.push_back(static_cast<int>(s));
  }
  try {
    return MjpPath(t_start, t_end, std::move(times), std::move(states));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(file + ": " + e.what());
  }
}

SufficientStats load_stats_json(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.contains("dwell") || !j.contains("counts"))
    throw ConfigError(path + ": statistics need dwell and counts");
  const auto dwell = j["dwell"].get<std::vector<double>>();
  const int n = static_cast<int>(dwell.size());
  SufficientStats stats(n);
  stats.dwell = dwell;
  const auto& counts = j["counts"];
  if (static_cast<int>(counts.size()) != n)
    throw ConfigError(path + ": counts must be an n-by-n matrix");
  for (int i = 0; i < n; ++i) {
    const auto row = counts[i].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != n)
      throw ConfigError(path + ": counts must be an n-by-n matrix");
    for (int j2 = 0; j2 < n; ++j2) stats.count(i, j2) = row[j2];
  }
  return stats;
}

void save_stats_json(const SufficientStats& stats, const std::string& path) {
  json j;
  j["dwell"] = stats.dwell;
  j["counts"] = json::array();
  for (int i = 0; i < stats.n; ++i) {
    std::vector<double> row(stats.n);
    for (int k = 0; k < stats.n; ++k) row[k] = stats.count(i, k);
    j["counts"].push_back(row);
  }
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace unipath
