#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "mlnc/graph.hpp"

namespace mlnc {

// Dataset directory layout:
//   edges.tsv     one "src<TAB>dst" pair of 0-based node ids per line
//   features.csv  N lines of d comma-separated reals
//   labels.csv    N lines of C comma-separated 0/1
//   meta.json     optional {"num_nodes", "num_features", "num_labels"}
//   split.json    optional, written by save_split
class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetStats {
  std::size_t num_nodes = 0;
  std::size_t num_edges = 0;  // undirected
  std::size_t num_features = 0;
  std::size_t num_labels = 0;
};

DatasetStats stats_of(const Graph& graph);
std::string format_stats(const DatasetStats& stats);

// Edges are symmetrized and deduplicated, self-loops dropped. Malformed lines
// are reported with file name and 1-based line number.
Graph load_dataset(const std::filesystem::path& dir);

// Writes edges.tsv (each undirected edge once), features.csv, labels.csv and
// meta.json. Reals are written with 17 significant digits so a reload is exact.
void save_dataset(const Graph& graph, const std::filesystem::path& dir);

nlohmann::json split_to_json(const Split& split);
Split split_from_json(const nlohmann::json& j);
void save_split(const Split& split, const std::filesystem::path& file);
Split load_split(const std::filesystem::path& file);

}  // namespace mlnc
