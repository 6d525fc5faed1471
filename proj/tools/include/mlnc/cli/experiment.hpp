#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlnc/backbones.hpp"
#include "mlnc/graph.hpp"
#include "mlnc/synthetic.hpp"
#include "mlnc/trainer.hpp"

namespace mlnc::cli {

// Raised for malformed experiment files; the message starts with the field path.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Value lists searched by `grid`. Empty lists keep the base config's value.
struct GridSpec {
  std::vector<double> learning_rate;
  std::vector<std::size_t> hidden;
  std::vector<double> dropout;
  std::vector<int> depth;
  std::vector<NormKind> norm;
  std::vector<bool> residual;

  std::size_t num_points() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// lr {0.001, 0.005, 0.01} x hidden {64, 128, 256} x dropout {0, 0.2, 0.3, 0.5}
// x depth 1..10 x norm {batch, layer} x residual {on, off}: 1440 points.
GridSpec full_grid();

struct GridPoint {
  ModelConfig model;
  TrainConfig train;
};

// Cartesian product in field order learning_rate, hidden, dropout, depth,
// norm, residual (last field varies fastest).
std::vector<GridPoint> expand(const GridSpec& grid, const ModelConfig& model,
                              const TrainConfig& train);

struct SyntheticSource {
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  friend bool operator==(const SyntheticSource&, const SyntheticSource&) = default;
};

// {
//   "dataset": "humloc" | "synthetic": {..., "seed": 0},
//   "model": {...}, "train": {...},
//   "grid": {"learning_rate": [...], ...} | "full",
//   "output_dir": "results"
// }
struct ExperimentConfig {
  std::optional<std::string> dataset;
  std::optional<SyntheticSource> synthetic;
  ModelConfig model;
  TrainConfig train;
  std::optional<GridSpec> grid;
  std::string output_dir = "results";

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

ExperimentConfig parse_experiment(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment(const std::filesystem::path& file);

// Relative dataset paths are resolved against $MLNC_DATA_DIR when it is set.
std::filesystem::path resolve_dataset_path(const std::string& dataset);

// Loads the dataset directory or generates the synthetic graph.
Graph load_source(const ExperimentConfig& config);

}  // namespace mlnc::cli
