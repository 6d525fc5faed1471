#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <random>

#include "mlnc/metrics.hpp"
#include "oracles.hpp"

namespace mlnc {
namespace {

EvalBatch batch(std::vector<std::vector<double>> scores, std::vector<std::vector<double>> truth) {
  return {Tensor2::from_rows(scores), Tensor2::from_rows(truth)};
}

TEST(RankingLoss, Examples) {
  EXPECT_EQ(ranking_loss(batch({{0.9, 0.1, 0.8}, {0.3, 0.7, 0.2}}, {{1, 0, 1}, {0, 1, 0}})), 0.0);
  EXPECT_EQ(ranking_loss(batch({{0.2, 0.9}}, {{1, 0}})), 1.0);
  EXPECT_EQ(ranking_loss(batch({{0.5, 0.5}}, {{1, 0}})), 0.5);
  EXPECT_THROW(ranking_loss(batch({{0.5, 0.5}, {0.1, 0.2}}, {{1, 1}, {0, 0}})), MetricError);
}

TEST(HammingLoss, Examples) {
  EXPECT_EQ(hamming_loss(batch({{1, 0}, {0, 1}}, {{1, 0}, {0, 1}})), 0.0);
  EXPECT_EQ(hamming_loss(batch({{0, 1}, {1, 0}}, {{1, 0}, {0, 1}})), 1.0);
  EXPECT_EQ(hamming_loss(batch({{0.6, 0.4}, {0.4, 0.6}}, {{1, 0}, {1, 0}})), 0.5);
  EXPECT_EQ(hamming_loss(batch({{0.5}}, {{1}})), 0.0);
}

TEST(Auc, Examples) {
  const std::vector<double> s = {0.9, 0.1, 0.8};
  const std::vector<double> y = {1, 0, 0};
  EXPECT_EQ(binary_auc(s, y), 1.0);
  EXPECT_EQ(binary_auc(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}), 0.5);
  EXPECT_EQ(macro_auc(batch({{0.9}, {0.1}, {0.8}}, {{1}, {0}, {0}})), 1.0);
  EXPECT_EQ(micro_auc(batch({{0.9, 0.2}, {0.1, 0.95}}, {{1, 0}, {0, 1}})), 1.0);
  EXPECT_THROW(binary_auc(std::vector<double>{0.5, 0.2}, std::vector<double>{1, 1}), MetricError);
  EXPECT_THROW(micro_auc(batch({{0.9, 0.2}}, {{1, 1}})), MetricError);
}

TEST(AveragePrecision, Examples) {
  EXPECT_EQ(average_precision(std::vector<double>{0.9, 0.8, 0.2}, std::vector<double>{1, 1, 0}), 1.0);
  for (int k = 2; k <= 7; ++k) {
    std::vector<double> s(k), y(k, 0.0);
    for (int i = 0; i < k; ++i) s[i] = 1.0 - 0.1 * i;
    y.back() = 1.0;
    EXPECT_DOUBLE_EQ(average_precision(s, y), 1.0 / k) << "k=" << k;
  }
  EXPECT_DOUBLE_EQ(
      average_precision(std::vector<double>{0.9, 0.8, 0.7}, std::vector<double>{1, 0, 1}), 5.0 / 6.0);
  // A tie group enters the sweep at once: precision 1/2 at recall 1.
  EXPECT_EQ(average_precision(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}), 0.5);
}

TEST(Lrap, Examples) {
  EXPECT_EQ(lrap(batch({{0.9, 0.8, 0.1}, {0.2, 0.7, 0.6}}, {{1, 1, 0}, {0, 1, 1}})), 1.0);
  EXPECT_DOUBLE_EQ(lrap(batch({{0.9, 0.8, 0.1}}, {{1, 0, 1}})), 5.0 / 6.0);
  EXPECT_NEAR(lrap(batch({{0.9, 0.8, 0.1}}, {{1, 0, 1}})), 0.8333, 1e-4);
  // Tied positives on top still score 1 under the max-rank convention.
  EXPECT_EQ(lrap(batch({{0.7, 0.7, 0.1}}, {{1, 1, 0}})), 1.0);
  EXPECT_THROW(lrap(batch({{0.7, 0.1}}, {{0, 0}})), MetricError);
}

TEST(Metrics, MatchBruteForceOracles) {
  using Lib = double (*)(const EvalBatch&);
  using Ref = double (*)(const Tensor2&, const Tensor2&);
  const std::vector<std::tuple<const char*, Lib, Ref>> pairs = {
      {"ranking_loss", ranking_loss, oracle::ranking_loss},
      {"hamming_loss", [](const EvalBatch& b) { return hamming_loss(b); }, oracle::hamming_loss},
      {"macro_auc", macro_auc, oracle::macro_auc},
      {"micro_auc", micro_auc, oracle::micro_auc},
      {"macro_ap", macro_ap, oracle::macro_ap},
      {"micro_ap", micro_ap, oracle::micro_ap},
      {"lrap", lrap, oracle::lrap},
  };
  std::mt19937_64 rng(123);
  std::uniform_int_distribution<std::size_t> rows(2, 40), cols(2, 8);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const EvalBatch b =
        oracle::random_batch(rows(rng), cols(rng), 5000 + trial, trial % 2 == 0, trial % 3 == 0);
    for (const auto& [name, lib, ref] : pairs) {
      double want = 0.0;
      bool defined = true;
      try {
        want = ref(b.scores, b.truth);
      } catch (const std::invalid_argument&) {
        defined = false;
      }
      if (!defined) {
        EXPECT_THROW(lib(b), MetricError) << name << " trial " << trial;
        continue;
      }
      const double got = lib(b);
      EXPECT_NEAR(got, want, 1e-12) << name << " trial " << trial;
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 1.0);
      ++compared;
    }
  }
  EXPECT_GT(compared, 1200);
}

TEST(Metrics, InvariantUnderMonotoneScoreMaps) {
  const std::vector<std::function<double(double)>> maps = {
      [](double s) { return std::exp(3.0 * s); },
      [](double s) { return s * s * s + s; },
      [](double s) { return std::log(s + 1e-3) - 7.0; },
  };
  for (int trial = 0; trial < 50; ++trial) {
    const EvalBatch b = oracle::random_batch(25, 5, 900 + trial, trial % 2 == 0, false);
    const MetricsReport base = compute_metrics(b);
    for (const auto& f : maps) {
      EvalBatch moved = b;
      for (double& s : moved.scores.data()) s = f(s);
      const MetricsReport m = compute_metrics(moved);
      for (Metric metric : kAllMetrics) {
        if (metric == Metric::kHammingLoss) continue;
        EXPECT_NEAR(m.get(metric), base.get(metric), 1e-12) << metric_key(metric);
      }
    }
  }
}

TEST(Metrics, SampleMetricsInvariantUnderLabelPermutation) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const EvalBatch b = oracle::random_batch(20, 6, 300 + trial, trial % 2 == 0, trial % 4 == 0);
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    EvalBatch p{Tensor2(20, 6), Tensor2(20, 6)};
    for (std::size_t r = 0; r < 20; ++r) {
      for (std::size_t c = 0; c < 6; ++c) {
        p.scores(r, perm[c]) = b.scores(r, c);
        p.truth(r, perm[c]) = b.truth(r, c);
      }
    }
    EXPECT_NEAR(lrap(p), lrap(b), 1e-12);
    EXPECT_NEAR(ranking_loss(p), ranking_loss(b), 1e-12);
  }
}

TEST(Metrics, MacroUnchangedByDuplicatingEqualValuedColumn) {
  // Column 1 is column 0 with its rows shuffled jointly, so both have the same
  // AUC and AP; appending another copy of column 0 keeps the macro means.
  const std::vector<double> s0 = {0.9, 0.3, 0.6, 0.2, 0.75, 0.1, 0.5};
  const std::vector<double> y0 = {1, 0, 0, 1, 1, 0, 0};
  const std::vector<std::size_t> shuffle = {3, 6, 0, 5, 1, 4, 2};
  EvalBatch two{Tensor2(7, 2), Tensor2(7, 2)};
  EvalBatch three{Tensor2(7, 3), Tensor2(7, 3)};
  for (std::size_t r = 0; r < 7; ++r) {
    two.scores(r, 0) = three.scores(r, 0) = three.scores(r, 2) = s0[r];
    two.truth(r, 0) = three.truth(r, 0) = three.truth(r, 2) = y0[r];
    two.scores(r, 1) = three.scores(r, 1) = s0[shuffle[r]];
    two.truth(r, 1) = three.truth(r, 1) = y0[shuffle[r]];
  }
  EXPECT_DOUBLE_EQ(macro_auc(three), macro_auc(two));
  EXPECT_DOUBLE_EQ(macro_ap(three), macro_ap(two));
  EXPECT_DOUBLE_EQ(macro_auc(two), binary_auc(s0, y0));
}

TEST(Metrics, DegenerateColumnsAndRowsAreSkippedAndReported) {
  // Column 1 is all positive, column 2 all negative; row 2 is all positive.
  const EvalBatch b = batch({{0.9, 0.4, 0.1}, {0.2, 0.6, 0.3}, {0.7, 0.8, 0.4}, {0.1, 0.9, 0.8}},
                            {{1, 1, 0}, {0, 1, 0}, {1, 1, 0}, {0, 1, 0}});
  const MetricsReport r = compute_metrics(b);
  EXPECT_EQ(r.skipped_labels, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(r.skipped_samples, 0u);
  EXPECT_EQ(r.macro_auc, 1.0);
  EXPECT_EQ(r.macro_ap, 1.0);

  const EvalBatch rows = batch({{0.9, 0.1}, {0.3, 0.6}, {0.5, 0.5}}, {{1, 1}, {1, 0}, {0, 0}});
  const MetricsReport rr = compute_metrics(rows);
  EXPECT_EQ(rr.skipped_samples, 2u);
  EXPECT_EQ(rr.ranking_loss, 1.0);
  EXPECT_EQ(rr.lrap, 0.5);

  EXPECT_THROW(macro_auc(batch({{0.1, 0.2}, {0.3, 0.4}}, {{1, 0}, {1, 0}})), MetricError);
}

TEST(Metrics, PerfectAndInvertedScores) {
  const EvalBatch b = oracle::random_batch(30, 5, 77, false, false);
  EvalBatch perfect = b;
  EvalBatch inverted = b;
  for (std::size_t i = 0; i < b.truth.size(); ++i) {
    perfect.scores.data()[i] = b.truth.data()[i] > 0 ? 0.9 : 0.1;
    inverted.scores.data()[i] = b.truth.data()[i] > 0 ? 0.1 : 0.9;
  }
  const MetricsReport p = compute_metrics(perfect);
  EXPECT_EQ(p.ranking_loss, 0.0);
  EXPECT_EQ(p.hamming_loss, 0.0);
  for (Metric m : {Metric::kMacroAuc, Metric::kMicroAuc, Metric::kMacroAp, Metric::kMicroAp,
                   Metric::kLrap}) {
    EXPECT_EQ(p.get(m), 1.0) << metric_key(m);
  }
  const MetricsReport q = compute_metrics(inverted);
  EXPECT_EQ(q.ranking_loss, 1.0);
  EXPECT_EQ(q.hamming_loss, 1.0);
  EXPECT_EQ(q.macro_auc, 0.0);
  EXPECT_EQ(q.micro_auc, 0.0);
}

TEST(Metrics, RandomScoresGiveChanceAuc) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  EvalBatch b{Tensor2(5000, 2), Tensor2(5000, 2)};
  for (double& s : b.scores.data()) s = u(rng);
  for (double& y : b.truth.data()) y = coin(rng) ? 1.0 : 0.0;
  EXPECT_NEAR(macro_auc(b), 0.5, 0.05);
  EXPECT_NEAR(micro_auc(b), 0.5, 0.05);
}

TEST(Metrics, BatchValidation) {
  EXPECT_THROW(validate(EvalBatch{Tensor2(2, 2), Tensor2(2, 3)}), std::invalid_argument);
  EXPECT_THROW(validate(batch({{0.1}}, {{0.5}})), std::invalid_argument);
  EXPECT_THROW(validate(batch({{std::nan("")}}, {{1}})), std::invalid_argument);
  EXPECT_THROW(compute_metrics(batch({{0.1}}, {{2}})), std::invalid_argument);
}

TEST(Metrics, NamesKeysAndJson) {
  const std::vector<std::string> keys = {"ranking_loss", "hamming_loss", "macro_auc", "micro_auc",
                                         "macro_ap",     "micro_ap",     "lrap"};
  const std::vector<std::string> titles = {"Ranking", "Hamming", "Ma-AUC", "Mi-AUC",
                                           "Ma-AP",   "Mi-AP",   "LRAP"};
  for (std::size_t i = 0; i < kAllMetrics.size(); ++i) {
    EXPECT_EQ(metric_key(kAllMetrics[i]), keys[i]);
    EXPECT_EQ(metric_title(kAllMetrics[i]), titles[i]);
    EXPECT_EQ(parse_metric(keys[i]), kAllMetrics[i]);
    EXPECT_EQ(lower_is_better(kAllMetrics[i]), i < 2);
  }
  EXPECT_THROW(parse_metric("f1"), std::invalid_argument);

  const EvalBatch b = batch({{0.9, 0.2}, {0.4, 0.7}, {0.6, 0.3}}, {{1, 0}, {0, 1}, {0, 0}});
  const MetricsReport r = compute_metrics(b);
  const nlohmann::json j = to_json(r);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    EXPECT_DOUBLE_EQ(j.at(keys[i]).get<double>(), r.get(kAllMetrics[i]) * 100.0);
  }
  EXPECT_EQ(j.at("skipped_samples"), 1);
  EXPECT_TRUE(j.at("skipped_labels").empty());
}

TEST(Evaluate, ConfidentCorrectModelScoresPerfectly) {
  const Graph base = oracle::random_graph(30, 3, 3, 0.0, 5);
  Tensor2 x(30, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = base.labels().data()[i] * 2.0 - 1.0;
  const Graph g = Graph::from_edges(30, {}, x, base.labels());
  ModelConfig c;
  c.depth = 1;
  c.hidden = 3;
  c.norm = NormKind::kNone;
  c.residual = false;
  Model m = build_model(c, 3, 3);
  m.param("input_proj.weight").value = Tensor2::identity(3);
  for (double& v : m.param("input_proj.weight").value.data()) v *= 20.0;
  m.param("layer0.weight").value = Tensor2::identity(3);
  std::vector<std::size_t> ids(30);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  const MetricsReport r = evaluate(m, g, normalize_adjacency(g), ids);
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j.at("ranking_loss"), 0.0);
  EXPECT_EQ(j.at("hamming_loss"), 0.0);
  for (const char* k : {"macro_auc", "micro_auc", "macro_ap", "micro_ap", "lrap"}) {
    EXPECT_EQ(j.at(k), 100.0) << k;
  }
  EXPECT_THROW(evaluate(m, g, normalize_adjacency(g), {}), std::invalid_argument);
}

}  // namespace
}  // namespace mlnc
