#include "mlnc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <sys/resource.h>

#include "mlnc/adam.hpp"
#include "mlnc/autodiff.hpp"
#include "mlnc/parallel.hpp"
#include "mlnc/rng.hpp"

namespace mlnc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool improves(Metric m, double candidate, double best) {
  return lower_is_better(m) ? candidate < best : candidate > best;
}

double metric_value(const MetricsReport& r, Metric m) { return r.get(m); }

}  // namespace

void validate(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    throw std::invalid_argument("train.learning_rate must be finite and >= 0");
  }
  if (c.max_epochs < 1) throw std::invalid_argument("train.max_epochs must be >= 1");
  if (c.patience < 1) throw std::invalid_argument("train.patience must be >= 1");
  if (c.patience > c.max_epochs) {
    throw std::invalid_argument("train.patience must not exceed train.max_epochs");
  }
  if (c.seeds.empty()) throw std::invalid_argument("train.seeds must not be empty");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"selection_metric", std::string(metric_key(c.selection_metric))},
                     {"seeds", c.seeds},
                     {"deterministic", c.deterministic},
                     {"workers", c.workers}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("train must be an object");
  static const std::array<std::string_view, 7> known = {
      "learning_rate", "max_epochs", "patience", "selection_metric",
      "seeds",         "deterministic", "workers"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("train." + key + " is not a known field");
    }
  }
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(std::string("train.") + key + " has the wrong type");
    }
  };
  read("learning_rate", c.learning_rate);
  read("max_epochs", c.max_epochs);
  read("patience", c.patience);
  if (j.contains("selection_metric")) {
    const auto& v = j.at("selection_metric");
    if (!v.is_string()) throw std::invalid_argument("train.selection_metric must be a string");
    try {
      c.selection_metric = parse_metric(v.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("train.selection_metric: ") + e.what());
    }
  }
  read("seeds", c.seeds);
  read("deterministic", c.deterministic);
  read("workers", c.workers);
}

DivergenceError::DivergenceError(std::uint64_t seed, int epoch, const std::string& detail)
    : std::runtime_error("seed " + std::to_string(seed) + ": training diverged at epoch " +
                         std::to_string(epoch) + ": " + detail),
      seed_(seed),
      epoch_(epoch) {}

RunResult aggregate(std::vector<SeedResult> seeds) {
  if (seeds.empty()) throw std::invalid_argument("aggregate: no seed results");
  RunResult out;
  const double n = static_cast<double>(seeds.size());
  for (Metric m : kAllMetrics) {
    double sum = 0.0;
    for (const auto& s : seeds) sum += metric_value(s.test, m);
    Aggregate a;
    a.mean = sum / n;
    if (seeds.size() >= 2) {
      double ss = 0.0;
      for (const auto& s : seeds) {
        const double d = metric_value(s.test, m) - a.mean;
        ss += d * d;
      }
      a.std = std::sqrt(ss / (n - 1.0));
    }
    out.aggregates[static_cast<std::size_t>(m)] = a;
  }
  out.seeds = std::move(seeds);
  return out;
}

nlohmann::json to_json(const RunResult& r, bool with_timings) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.seeds) {
    nlohmann::json row{{"seed", s.seed},
                       {"test", to_json(s.test)},
                       {"best_val", s.best_val * kTableScale},
                       {"last_val", s.last_val * kTableScale},
                       {"selected_epoch", s.selected_epoch},
                       {"epochs_run", s.epochs_run},
                       {"final_train_loss", s.final_train_loss}};
    if (with_timings) {
      row["train_ms_per_epoch"] = s.train_ms_per_epoch;
      row["inference_ms"] = s.inference_ms;
    }
    seeds.push_back(std::move(row));
  }
  nlohmann::json agg;
  for (Metric m : kAllMetrics) {
    const Aggregate& a = r.aggregate(m);
    nlohmann::json cell{{"mean", a.mean * kTableScale}};
    cell["std"] = a.std ? nlohmann::json(*a.std * kTableScale) : nlohmann::json(nullptr);
    agg[std::string(metric_key(m))] = std::move(cell);
  }
  return {{"seeds", std::move(seeds)}, {"aggregate", std::move(agg)}};
}

TrainedModel train_one(const ModelConfig& model_config, const TrainConfig& tc, const Graph& graph,
                       const Split& split, std::uint64_t seed) {
  validate(tc);
  validate_split(split, graph.num_nodes());
  ModelConfig mc = model_config;
  mc.seed = seed;
  validate(mc);

  const NormalizedAdjacency adj = normalize_adjacency(graph);
  Model model = build_model(mc, graph.num_features(), graph.num_labels());
  Adam adam(AdamOptions{.learning_rate = tc.learning_rate});
  Rng dropout_rng = make_rng(seed, "dropout");

  const double entries = static_cast<double>(split.train.size() * graph.num_labels());
  SeedResult result;
  result.seed = seed;
  Model best = model;
  double best_val = lower_is_better(tc.selection_metric) ? std::numeric_limits<double>::infinity()
                                                         : -std::numeric_limits<double>::infinity();
  int since_best = 0;
  double train_ms = 0.0;

  for (int epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    const auto start = Clock::now();
    double loss = 0.0;
    double val = 0.0;
    try {
      Tape tape;
      Var logits = forward(tape, model, graph, adj, Mode::kTrain, dropout_rng);
      Var l = nn::bce_with_logits(tape, logits, graph.labels(), split.train);
      loss = tape.value(l)(0, 0);
      tape.backward(l);
      adam.step(model.params());
      for (const Param& p : model.params()) {
        if (!p.value.all_finite()) throw NumericError("parameter " + p.id + " is not finite");
      }
      train_ms += ms_since(start);
      // Finite parameters can still overflow in the eval-mode forward.
      val = metric_value(evaluate(model, graph, adj, split.val), tc.selection_metric);
    } catch (const NumericError& e) {
      throw DivergenceError(seed, epoch, e.what());
    }
    result.final_train_loss = loss / entries;
    result.epochs_run = epoch;

    result.last_val = val;
    if (improves(tc.selection_metric, val, best_val)) {
      best_val = val;
      best = model;
      result.selected_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= tc.patience) {
      break;
    }
  }

  result.best_val = best_val;
  result.train_ms_per_epoch = train_ms / result.epochs_run;
  const auto start = Clock::now();
  result.test = evaluate(best, graph, adj, split.test);
  result.inference_ms = ms_since(start);
  return {std::move(best), std::move(result)};
}

RunResult run_seeds(const ModelConfig& model_config, const TrainConfig& tc, const Graph& graph,
                    Model* first_model) {
  validate(tc);
  const std::size_t n = tc.seeds.size();
  std::vector<SeedResult> results(n);
  std::optional<Model> first;
  parallel_for(n, resolve_workers(tc.workers, n), [&](std::size_t i) {
    const std::uint64_t seed = tc.seeds[i];
    TrainedModel run = train_one(model_config, tc, graph, make_split(graph, seed), seed);
    results[i] = std::move(run.result);
    if (i == 0 && first_model != nullptr) first = std::move(run.model);
  });
  if (first_model != nullptr) *first_model = std::move(*first);
  return aggregate(std::move(results));
}

std::vector<std::pair<std::string, ModelConfig>> ablation_variants(const ModelConfig& base) {
  ModelConfig basic = base;
  basic.residual = false;
  basic.norm = NormKind::kNone;
  basic.dropout = 0.0;
  ModelConfig no_dropout = base;
  no_dropout.dropout = 0.0;
  ModelConfig no_residual = base;
  no_residual.residual = false;
  ModelConfig no_norm = base;
  no_norm.norm = NormKind::kNone;
  return {{"Basic", basic},
          {"w/o Dropout", no_dropout},
          {"w/o Residual", no_residual},
          {"w/o Norm", no_norm},
          {"Full", base}};
}

std::vector<AblationRow> run_ablation(const ModelConfig& base, const TrainConfig& tc,
                                      const Graph& graph) {
  validate(base);
  if (base.dropout <= 0.0 || base.norm == NormKind::kNone || !base.residual) {
    throw std::invalid_argument(
        "ablation base config needs dropout > 0, a norm and residual enabled");
  }
  std::vector<AblationRow> rows;
  for (auto& [name, config] : ablation_variants(base)) {
    rows.push_back({name, config, run_seeds(config, tc, graph)});
  }
  return rows;
}

EfficiencyReport measure_efficiency(const ModelConfig& model_config, const TrainConfig& tc,
                                    const Graph& graph, int repeats) {
  validate(tc);
  if (repeats < 1) throw std::invalid_argument("measure_efficiency: repeats must be >= 1");
  const std::uint64_t seed = tc.seeds.front();
  ModelConfig mc = model_config;
  mc.seed = seed;
  validate(mc);
  const Split split = make_split(graph, seed);
  const NormalizedAdjacency adj = normalize_adjacency(graph);
  Model model = build_model(mc, graph.num_features(), graph.num_labels());
  Adam adam(AdamOptions{.learning_rate = tc.learning_rate});
  Rng rng = make_rng(seed, "dropout");

  std::vector<double> epoch_ms;
  std::vector<double> infer_ms;
  for (int i = 0; i < repeats; ++i) {
    const auto start = Clock::now();
    Tape tape;
    Var logits = forward(tape, model, graph, adj, Mode::kTrain, rng);
    Var l = nn::bce_with_logits(tape, logits, graph.labels(), split.train);
    tape.backward(l);
    adam.step(model.params());
    epoch_ms.push_back(ms_since(start));
  }
  for (int i = 0; i < repeats; ++i) {
    const auto start = Clock::now();
    Tensor2 out = predict_logits(model, graph, adj);
    infer_ms.push_back(ms_since(start));
    if (out.empty()) break;
  }
  return {median(epoch_ms), median(infer_ms), peak_rss_mb()};
}

double peak_rss_mb() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) return std::stod(line.substr(6)) / 1024.0;
  }
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) == 0) return static_cast<double>(usage.ru_maxrss) / 1024.0;
  return 0.0;
}

}  // namespace mlnc
