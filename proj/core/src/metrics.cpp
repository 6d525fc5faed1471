#include "mlnc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mlnc/autodiff.hpp"

namespace mlnc {

std::string_view metric_key(Metric m) {
  switch (m) {
    case Metric::kRankingLoss: return "ranking_loss";
    case Metric::kHammingLoss: return "hamming_loss";
    case Metric::kMacroAuc: return "macro_auc";
    case Metric::kMicroAuc: return "micro_auc";
    case Metric::kMacroAp: return "macro_ap";
    case Metric::kMicroAp: return "micro_ap";
    case Metric::kLrap: return "lrap";
  }
  return "?";
}

std::string_view metric_title(Metric m) {
  switch (m) {
    case Metric::kRankingLoss: return "Ranking";
    case Metric::kHammingLoss: return "Hamming";
    case Metric::kMacroAuc: return "Ma-AUC";
    case Metric::kMicroAuc: return "Mi-AUC";
    case Metric::kMacroAp: return "Ma-AP";
    case Metric::kMicroAp: return "Mi-AP";
    case Metric::kLrap: return "LRAP";
  }
  return "?";
}

Metric parse_metric(std::string_view key) {
  for (Metric m : kAllMetrics) {
    if (metric_key(m) == key) return m;
  }
  throw std::invalid_argument("unknown metric '" + std::string(key) + "'");
}

bool lower_is_better(Metric m) {
  return m == Metric::kRankingLoss || m == Metric::kHammingLoss;
}

void validate(const EvalBatch& b) {
  require_same_shape(b.scores, b.truth, "EvalBatch");
  for (double v : b.truth.data()) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("EvalBatch: truth must be 0 or 1");
  }
  for (double v : b.scores.data()) {
    if (std::isnan(v)) throw std::invalid_argument("EvalBatch: NaN score");
  }
}

namespace {

// Order of indices by descending score.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

struct PairCounts {
  double positives = 0;
  double negatives = 0;
  double correct = 0;  // positive above negative, ties counted 0.5
};

// Counts (p, n) pairs via a descending sweep over tie groups.
PairCounts count_pairs(std::span<const double> scores, std::span<const double> truth) {
  const auto order = descending(scores);
  PairCounts out;
  double pos_above = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double group_pos = 0;
    double group_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (truth[order[j]] > 0.5 ? group_pos : group_neg) += 1;
      ++j;
    }
    out.correct += group_neg * (pos_above + 0.5 * group_pos);
    pos_above += group_pos;
    out.positives += group_pos;
    out.negatives += group_neg;
    i = j;
  }
  return out;
}

std::span<const double> column_copy(const Tensor2& m, std::size_t c, std::vector<double>& buf) {
  buf.resize(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) buf[r] = m(r, c);
  return buf;
}

bool degenerate(std::span<const double> truth) {
  const auto pos = std::count_if(truth.begin(), truth.end(), [](double v) { return v > 0.5; });
  return pos == 0 || static_cast<std::size_t>(pos) == truth.size();
}

template <typename PerLabel>
double macro_average(const EvalBatch& b, PerLabel&& fn, const char* name) {
  validate(b);
  std::vector<double> s;
  std::vector<double> t;
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < b.truth.cols(); ++c) {
    auto truth = column_copy(b.truth, c, t);
    if (degenerate(truth)) continue;
    sum += fn(column_copy(b.scores, c, s), truth);
    ++used;
  }
  if (used == 0) throw MetricError(std::string(name) + ": every label is degenerate");
  return sum / static_cast<double>(used);
}

template <typename PerSample>
double sample_average(const EvalBatch& b, PerSample&& fn, const char* name) {
  validate(b);
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t r = 0; r < b.truth.rows(); ++r) {
    auto truth = b.truth.row(r);
    if (degenerate(truth)) continue;
    sum += fn(b.scores.row(r), truth);
    ++used;
  }
  if (used == 0) throw MetricError(std::string(name) + ": every sample is degenerate");
  return sum / static_cast<double>(used);
}

double sample_lrap(std::span<const double> scores, std::span<const double> truth) {
  const auto order = descending(scores);
  double total = 0.0;
  double positives = 0.0;
  double pos_seen = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double group_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (truth[order[j]] > 0.5) group_pos += 1;
      ++j;
    }
    // Every member of a tie group shares rank j (items scoring >= it).
    pos_seen += group_pos;
    total += group_pos * pos_seen / static_cast<double>(j);
    positives += group_pos;
    i = j;
  }
  return total / positives;
}

}  // namespace

double binary_auc(std::span<const double> scores, std::span<const double> truth) {
  if (scores.size() != truth.size()) throw ShapeError("binary_auc: length mismatch");
  const PairCounts pc = count_pairs(scores, truth);
  if (pc.positives == 0 || pc.negatives == 0) {
    throw MetricError("AUC needs at least one positive and one negative");
  }
  return pc.correct / (pc.positives * pc.negatives);
}

double average_precision(std::span<const double> scores, std::span<const double> truth) {
  if (scores.size() != truth.size()) throw ShapeError("average_precision: length mismatch");
  const auto order = descending(scores);
  const auto total_pos = static_cast<double>(
      std::count_if(truth.begin(), truth.end(), [](double v) { return v > 0.5; }));
  if (total_pos == 0 || total_pos == static_cast<double>(truth.size())) {
    throw MetricError("AP needs at least one positive and one negative");
  }
  double ap = 0.0;
  double tp = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (truth[order[j]] > 0.5) tp += 1;
      ++j;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / static_cast<double>(j));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double ranking_loss(const EvalBatch& b) {
  return sample_average(
      b,
      [](std::span<const double> s, std::span<const double> t) {
        const PairCounts pc = count_pairs(s, t);
        const double pairs = pc.positives * pc.negatives;
        return (pairs - pc.correct) / pairs;
      },
      "ranking_loss");
}

double hamming_loss(const EvalBatch& b, double threshold) {
  validate(b);
  if (b.scores.empty()) throw MetricError("hamming_loss: empty batch");
  auto s = b.scores.data();
  auto t = b.truth.data();
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool predicted = s[i] >= threshold;
    if (predicted != (t[i] > 0.5)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(s.size());
}

double macro_auc(const EvalBatch& b) { return macro_average(b, binary_auc, "macro_auc"); }

double macro_ap(const EvalBatch& b) { return macro_average(b, average_precision, "macro_ap"); }

double micro_auc(const EvalBatch& b) {
  validate(b);
  return binary_auc(b.scores.data(), b.truth.data());
}

double micro_ap(const EvalBatch& b) {
  validate(b);
  return average_precision(b.scores.data(), b.truth.data());
}

double lrap(const EvalBatch& b) { return sample_average(b, sample_lrap, "lrap"); }

double MetricsReport::get(Metric m) const {
  switch (m) {
    case Metric::kRankingLoss: return ranking_loss;
    case Metric::kHammingLoss: return hamming_loss;
    case Metric::kMacroAuc: return macro_auc;
    case Metric::kMicroAuc: return micro_auc;
    case Metric::kMacroAp: return macro_ap;
    case Metric::kMicroAp: return micro_ap;
    case Metric::kLrap: return lrap;
  }
  return 0.0;
}

MetricsReport compute_metrics(const EvalBatch& b) {
  validate(b);
  MetricsReport r;
  r.ranking_loss = mlnc::ranking_loss(b);
  r.hamming_loss = mlnc::hamming_loss(b);
  r.macro_auc = mlnc::macro_auc(b);
  r.micro_auc = mlnc::micro_auc(b);
  r.macro_ap = mlnc::macro_ap(b);
  r.micro_ap = mlnc::micro_ap(b);
  r.lrap = mlnc::lrap(b);
  std::vector<double> buf;
  for (std::size_t c = 0; c < b.truth.cols(); ++c) {
    if (degenerate(column_copy(b.truth, c, buf))) r.skipped_labels.push_back(c);
  }
  for (std::size_t row = 0; row < b.truth.rows(); ++row) {
    if (degenerate(b.truth.row(row))) ++r.skipped_samples;
  }
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  for (Metric m : kAllMetrics) j[std::string(metric_key(m))] = r.get(m) * kTableScale;
  j["skipped_labels"] = r.skipped_labels;
  j["skipped_samples"] = r.skipped_samples;
  return j;
}

MetricsReport evaluate(const Model& model, const Graph& graph, const NormalizedAdjacency& adj,
                       std::span<const std::size_t> node_ids) {
  if (node_ids.empty()) throw std::invalid_argument("evaluate: empty node set");
  const Tensor2 scores = sigmoid(predict_logits(model, graph, adj));
  return compute_metrics({gather_rows(scores, node_ids), gather_rows(graph.labels(), node_ids)});
}

}  // namespace mlnc
