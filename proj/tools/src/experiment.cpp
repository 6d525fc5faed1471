#include "mlnc/cli/experiment.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>
#include <string_view>

#include "mlnc/dataset_io.hpp"

namespace mlnc::cli {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<std::string_view> known) {
  if (!j.is_object()) throw ConfigError(path + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(path + "." + key + " is not a known field");
    }
  }
}

// Parses `section` field by field so that errors name the offending key.
template <typename T>
T parse_section(const json& section, const std::string& path) {
  T out{};
  try {
    from_json(section, out);
  } catch (const std::exception&) {
    for (const auto& [key, value] : section.items()) {
      T probe{};
      try {
        from_json(json{{key, value}}, probe);
      } catch (const std::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
      }
    }
    throw;
  }
  return out;
}

template <typename T>
std::vector<T> read_list(const json& grid, const char* key) {
  if (!grid.contains(key)) return {};
  const json& v = grid.at(key);
  if (!v.is_array() || v.empty()) {
    throw ConfigError(std::string("grid.") + key + " must be a non-empty list");
  }
  try {
    return v.get<std::vector<T>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("grid.") + key + ": " + e.what());
  }
}

GridSpec parse_grid(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "full") throw ConfigError("grid must be an object or \"full\"");
    return full_grid();
  }
  reject_unknown(j, "grid", {"learning_rate", "hidden", "dropout", "depth", "norm", "residual"});
  GridSpec g;
  g.learning_rate = read_list<double>(j, "learning_rate");
  g.hidden = read_list<std::size_t>(j, "hidden");
  g.dropout = read_list<double>(j, "dropout");
  g.depth = read_list<int>(j, "depth");
  for (const auto& name : read_list<std::string>(j, "norm")) {
    try {
      g.norm.push_back(parse_norm(name));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("grid.norm: ") + e.what());
    }
  }
  g.residual = read_list<bool>(j, "residual");
  if (g.num_points() == 0) throw ConfigError("grid must list at least one field");
  return g;
}

json grid_to_json(const GridSpec& g) {
  json j = json::object();
  if (!g.learning_rate.empty()) j["learning_rate"] = g.learning_rate;
  if (!g.hidden.empty()) j["hidden"] = g.hidden;
  if (!g.dropout.empty()) j["dropout"] = g.dropout;
  if (!g.depth.empty()) j["depth"] = g.depth;
  if (!g.norm.empty()) {
    json names = json::array();
    for (NormKind n : g.norm) names.push_back(std::string(to_string(n)));
    j["norm"] = names;
  }
  if (!g.residual.empty()) j["residual"] = g.residual;
  return j;
}

}  // namespace

std::size_t GridSpec::num_points() const {
  auto factor = [](std::size_t n) { return n == 0 ? std::size_t{1} : n; };
  const std::size_t listed = learning_rate.size() + hidden.size() + dropout.size() +
                             depth.size() + norm.size() + residual.size();
  if (listed == 0) return 0;
  return factor(learning_rate.size()) * factor(hidden.size()) * factor(dropout.size()) *
         factor(depth.size()) * factor(norm.size()) * factor(residual.size());
}

GridSpec full_grid() {
  GridSpec g;
  g.learning_rate = {0.001, 0.005, 0.01};
  g.hidden = {64, 128, 256};
  g.dropout = {0.0, 0.2, 0.3, 0.5};
  for (int k = 1; k <= 10; ++k) g.depth.push_back(k);
  g.norm = {NormKind::kBatch, NormKind::kLayer};
  g.residual = {true, false};
  return g;
}

std::vector<GridPoint> expand(const GridSpec& grid, const ModelConfig& model,
                              const TrainConfig& train) {
  std::vector<GridPoint> points{{model, train}};
  auto branch = [&points](const auto& values, auto&& apply) {
    if (values.empty()) return;
    std::vector<GridPoint> next;
    for (const GridPoint& p : points) {
      for (const auto& v : values) {
        GridPoint q = p;
        apply(q, v);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  };
  branch(grid.learning_rate, [](GridPoint& p, double v) { p.train.learning_rate = v; });
  branch(grid.hidden, [](GridPoint& p, std::size_t v) { p.model.hidden = v; });
  branch(grid.dropout, [](GridPoint& p, double v) { p.model.dropout = v; });
  branch(grid.depth, [](GridPoint& p, int v) { p.model.depth = v; });
  branch(grid.norm, [](GridPoint& p, NormKind v) { p.model.norm = v; });
  branch(grid.residual, [](GridPoint& p, bool v) { p.model.residual = v; });
  return points;
}

ExperimentConfig parse_experiment(const json& j) {
  reject_unknown(j, "config", {"dataset", "synthetic", "model", "train", "grid", "output_dir"});
  ExperimentConfig c;
  if (j.contains("dataset") == j.contains("synthetic")) {
    throw ConfigError("config: exactly one of dataset and synthetic must be given");
  }
  if (j.contains("dataset")) {
    if (!j.at("dataset").is_string()) throw ConfigError("dataset must be a path string");
    c.dataset = j.at("dataset").get<std::string>();
  } else {
    const json& s = j.at("synthetic");
    reject_unknown(s, "synthetic", {"num_nodes", "num_labels", "num_features", "prevalence",
                                    "p_intra", "p_inter", "noise", "seed"});
    SyntheticSource src;
    json spec = s;
    if (spec.contains("seed")) {
      const json& seed = spec.at("seed");
      if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
        throw ConfigError("synthetic.seed must be a non-negative integer");
      }
      src.seed = seed.get<std::uint64_t>();
      spec.erase("seed");
    }
    src.spec = parse_section<SyntheticSpec>(spec, "synthetic");
    try {
      validate(src.spec);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    c.synthetic = src;
  }
  if (j.contains("model")) {
    reject_unknown(j.at("model"), "model",
                   {"backbone", "depth", "hidden", "dropout", "norm", "residual", "ssg_alpha",
                    "gcnii_alpha", "gcnii_lambda", "seed"});
    c.model = parse_section<ModelConfig>(j.at("model"), "model");
  }
  try {
    validate(c.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (j.contains("train")) {
    try {
      from_json(j.at("train"), c.train);
      validate(c.train);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("grid")) c.grid = parse_grid(j.at("grid"));
  if (c.grid) {
    for (const GridPoint& p : expand(*c.grid, c.model, c.train)) {
      try {
        validate(p.model);
        validate(p.train);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("grid: ") + e.what());
      }
    }
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  if (c.dataset) j["dataset"] = *c.dataset;
  if (c.synthetic) {
    json s = c.synthetic->spec;
    s["seed"] = c.synthetic->seed;
    j["synthetic"] = s;
  }
  j["model"] = c.model;
  j["train"] = c.train;
  if (c.grid) j["grid"] = grid_to_json(*c.grid);
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig load_experiment(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return parse_experiment(j);
}

std::filesystem::path resolve_dataset_path(const std::string& dataset) {
  std::filesystem::path p(dataset);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("MLNC_DATA_DIR"); root != nullptr && *root != '\0') {
    return std::filesystem::path(root) / p;
  }
  return p;
}

Graph load_source(const ExperimentConfig& c) {
  if (c.dataset) return load_dataset(resolve_dataset_path(*c.dataset));
  if (c.synthetic) return generate_synthetic(c.synthetic->spec, c.synthetic->seed);
  throw ConfigError("config has no data source");
}

}  // namespace mlnc::cli
