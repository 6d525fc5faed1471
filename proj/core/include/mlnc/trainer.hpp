#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlnc/backbones.hpp"
#include "mlnc/graph.hpp"
#include "mlnc/metrics.hpp"

namespace mlnc {

struct TrainConfig {
  double learning_rate = 0.01;
  int max_epochs = 500;
  int patience = 50;
  Metric selection_metric = Metric::kMicroAp;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  bool deterministic = false;
  // Concurrent seed runs; 0 means one per hardware thread.
  std::size_t workers = 1;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Throws std::invalid_argument with a "train." prefixed field name.
void validate(const TrainConfig& config);
void to_json(nlohmann::json& j, const TrainConfig& config);
void from_json(const nlohmann::json& j, TrainConfig& config);

// Non-finite values during training. Carries the seed and 1-based epoch.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t seed, int epoch, const std::string& detail);
  std::uint64_t seed() const { return seed_; }
  int epoch() const { return epoch_; }

 private:
  std::uint64_t seed_;
  int epoch_;
};

struct SeedResult {
  std::uint64_t seed = 0;
  MetricsReport test;
  double best_val = 0.0;        // selection metric of the restored snapshot, in [0,1]
  double last_val = 0.0;        // selection metric after the final epoch
  int selected_epoch = 0;       // 1-based epoch of the snapshot
  int epochs_run = 0;
  double final_train_loss = 0.0;  // mean per-entry BCE of the last epoch
  double train_ms_per_epoch = 0.0;
  double inference_ms = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  std::optional<double> std;  // sample std (n - 1); absent for a single seed
};

struct RunResult {
  std::vector<SeedResult> seeds;
  std::array<Aggregate, kAllMetrics.size()> aggregates{};

  const Aggregate& aggregate(Metric m) const { return aggregates[static_cast<std::size_t>(m)]; }
};

RunResult aggregate(std::vector<SeedResult> seeds);

// Metric values use the table scale. Wall-clock fields are left out when
// `with_timings` is false so that deterministic runs serialize identically.
nlohmann::json to_json(const RunResult& result, bool with_timings);

struct TrainedModel {
  Model model;
  SeedResult result;
};

// Builds the model from `seed` (overriding model_config.seed), trains with
// Adam on the summed BCE of split.train and restores the best-validation
// snapshot before scoring split.test.
TrainedModel train_one(const ModelConfig& model_config, const TrainConfig& train_config,
                       const Graph& graph, const Split& split, std::uint64_t seed);

// One train_one per seed on make_split(graph, seed). Results keep seed order
// regardless of worker count. `first_model`, when given, receives the first
// seed's restored model.
RunResult run_seeds(const ModelConfig& model_config, const TrainConfig& train_config,
                    const Graph& graph, Model* first_model = nullptr);

struct AblationRow {
  std::string name;
  ModelConfig config;
  RunResult result;
};

inline constexpr std::array<Metric, 3> kAblationMetrics = {Metric::kMacroAuc, Metric::kMacroAp,
                                                           Metric::kLrap};

// The five variants in table order: Basic, w/o Dropout, w/o Residual, w/o Norm, Full.
std::vector<std::pair<std::string, ModelConfig>> ablation_variants(const ModelConfig& base);

// Requires dropout > 0, a norm and residual on in `base`.
std::vector<AblationRow> run_ablation(const ModelConfig& base, const TrainConfig& train_config,
                                      const Graph& graph);

struct EfficiencyReport {
  double train_ms_per_epoch = 0.0;  // median
  double inference_ms = 0.0;        // median
  double peak_rss_mb = 0.0;         // process high-water mark, best effort
};

inline constexpr int kEfficiencyRepeats = 20;

EfficiencyReport measure_efficiency(const ModelConfig& model_config,
                                    const TrainConfig& train_config, const Graph& graph,
                                    int repeats = kEfficiencyRepeats);

// Peak resident set size of this process in MiB, 0 if unavailable.
double peak_rss_mb();

}  // namespace mlnc
