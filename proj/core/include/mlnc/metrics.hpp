#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlnc/backbones.hpp"
#include "mlnc/graph.hpp"
#include "mlnc/tensor.hpp"

namespace mlnc {

// Tie policy everywhere: a tied (positive, negative) pair earns 0.5 and AP
// sweeps enter a whole tie group at once. Samples whose truth row is all 0 or
// all 1 are skipped by the per-sample metrics; labels whose truth column is
// all 0 or all 1 are skipped by the macro metrics.

enum class Metric { kRankingLoss, kHammingLoss, kMacroAuc, kMicroAuc, kMacroAp, kMicroAp, kLrap };

inline constexpr std::array<Metric, 7> kAllMetrics = {
    Metric::kRankingLoss, Metric::kHammingLoss, Metric::kMacroAuc, Metric::kMicroAuc,
    Metric::kMacroAp,     Metric::kMicroAp,     Metric::kLrap};

// Stable key used in JSON and CSV headers, e.g. "macro_auc".
std::string_view metric_key(Metric m);
// Column title used in markdown tables, e.g. "Ma-AUC".
std::string_view metric_title(Metric m);
Metric parse_metric(std::string_view key);
bool lower_is_better(Metric m);

// Table-facing values are reported on a 0..100 scale.
inline constexpr double kTableScale = 100.0;

// Raised when a metric is undefined for the batch (e.g. every label degenerate).
class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EvalBatch {
  Tensor2 scores;  // M x C, any monotone score (typically sigmoid probabilities)
  Tensor2 truth;   // M x C, 0/1
};

void validate(const EvalBatch& batch);

double ranking_loss(const EvalBatch& batch);
double hamming_loss(const EvalBatch& batch, double threshold = 0.5);
double macro_auc(const EvalBatch& batch);
double micro_auc(const EvalBatch& batch);
double macro_ap(const EvalBatch& batch);
double micro_ap(const EvalBatch& batch);
double lrap(const EvalBatch& batch);

// Mann-Whitney AUC and step-wise average precision of one score column.
double binary_auc(std::span<const double> scores, std::span<const double> truth);
double average_precision(std::span<const double> scores, std::span<const double> truth);

struct MetricsReport {
  double ranking_loss = 0.0;
  double hamming_loss = 0.0;
  double macro_auc = 0.0;
  double micro_auc = 0.0;
  double macro_ap = 0.0;
  double micro_ap = 0.0;
  double lrap = 0.0;
  std::vector<std::size_t> skipped_labels;  // degenerate columns left out of macro metrics
  std::size_t skipped_samples = 0;          // degenerate rows left out of ranking loss / LRAP

  double get(Metric m) const;
  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

MetricsReport compute_metrics(const EvalBatch& batch);

// Metric values are written on the table scale (x100) under metric_key names.
nlohmann::json to_json(const MetricsReport& report);

// Eval-mode forward, sigmoid, restriction to `node_ids`, then all seven metrics.
MetricsReport evaluate(const Model& model, const Graph& graph, const NormalizedAdjacency& adj,
                       std::span<const std::size_t> node_ids);

}  // namespace mlnc
