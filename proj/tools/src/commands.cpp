#include "mlnc/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "mlnc/checkpoint.hpp"
#include "mlnc/cli/report.hpp"
#include "mlnc/dataset_io.hpp"
#include "mlnc/parallel.hpp"

namespace mlnc::cli {

namespace {

using json = nlohmann::json;

struct Loaded {
  ExperimentConfig config;
  Graph graph;
  DatasetStats stats;
  std::filesystem::path out;
};

Loaded prepare(const Options& options, std::ostream& log) {
  ExperimentConfig config = apply_overrides(load_experiment(options.config), options);
  Graph graph = load_source(config);
  const DatasetStats stats = stats_of(graph);
  log << format_stats(stats) << '\n';
  std::filesystem::path out(config.output_dir);
  std::filesystem::create_directories(out);
  return {std::move(config), std::move(graph), stats, std::move(out)};
}

// The experiment as actually run, for embedding in result files.
json run_record(const ExperimentConfig& config, const ModelConfig& model, const TrainConfig& train,
                const DatasetStats& stats, const RunResult& result) {
  ExperimentConfig effective = config;
  effective.model = model;
  effective.train = train;
  effective.grid.reset();
  json config_json = to_json(effective);
  // Execution-only settings that do not change any number.
  config_json.erase("output_dir");
  config_json["train"].erase("workers");
  return {{"config", std::move(config_json)},
          {"dataset", stats_json(stats)},
          {"result", to_json(result, !train.deterministic)}};
}

void write_run(const std::filesystem::path& out, const ExperimentConfig& config,
               const ModelConfig& model, const TrainConfig& train, const DatasetStats& stats,
               const RunResult& result, const Model& first_model, std::ostream& log) {
  write_json(out / "results.json", run_record(config, model, train, stats, result));
  write_text(out / "results.csv", results_csv(result));
  write_text(out / "results.md", results_markdown(describe(model), result));
  write_checkpoint(out / "model.ckpt", first_model.state());
  log << results_markdown(describe(model), result);
  log << "wrote results.json, results.csv, results.md, model.ckpt to " << out.string() << '\n';
}

double estimate_epoch_ms(const ExperimentConfig& config, const Graph& graph) {
  TrainConfig probe = config.train;
  return measure_efficiency(config.model, probe, graph, 3).train_ms_per_epoch;
}

}  // namespace

ExperimentConfig apply_overrides(ExperimentConfig config, const Options& options) {
  if (options.out) config.output_dir = options.out->string();
  if (options.seeds) config.train.seeds = *options.seeds;
  if (options.workers) config.train.workers = *options.workers;
  if (options.deterministic) config.train.deterministic = true;
  try {
    validate(config.train);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return config;
}

int cmd_train(const Options& options, std::ostream& log) {
  Loaded in = prepare(options, log);
  Model first;
  const RunResult result = run_seeds(in.config.model, in.config.train, in.graph, &first);
  write_run(in.out, in.config, in.config.model, in.config.train, in.stats, result, first, log);
  return 0;
}

int cmd_grid(const Options& options, std::ostream& log) {
  Loaded in = prepare(options, log);
  if (!in.config.grid) throw ConfigError("grid: the config has no grid section");
  const std::vector<GridPoint> points = expand(*in.config.grid, in.config.model, in.config.train);
  const TrainConfig& base_train = in.config.train;

  if (points.size() > kGridGate) {
    const double epoch_ms = estimate_epoch_ms(in.config, in.graph);
    const double hours = static_cast<double>(points.size()) * base_train.max_epochs * epoch_ms /
                         3.6e6 / static_cast<double>(resolve_workers(base_train.workers,
                                                                     points.size()));
    log << "grid has " << points.size() << " points; at about " << format_number(epoch_ms)
        << " ms per epoch and up to " << base_train.max_epochs
        << " epochs each, the search may take up to " << format_number(std::ceil(hours * 10) / 10)
        << " h (early stopping usually cuts this)\n";
    if (!options.full_grid) {
      log << "refusing to run more than " << kGridGate << " points without --full-grid\n";
      return kExitGridGated;
    }
  }

  const std::uint64_t seed = base_train.seeds.front();
  const Split split = make_split(in.graph, seed);
  const Metric metric = base_train.selection_metric;
  struct Outcome {
    bool ok = false;
    double val = 0.0;
    std::string error;
  };
  std::vector<Outcome> outcomes(points.size());
  parallel_for(points.size(), resolve_workers(base_train.workers, points.size()),
               [&](std::size_t i) {
                 try {
                   TrainConfig single = points[i].train;
                   single.seeds = {seed};
                   const TrainedModel t = train_one(points[i].model, single, in.graph, split, seed);
                   outcomes[i] = {true, t.result.best_val, {}};
                 } catch (const std::exception& e) {
                   outcomes[i] = {false, 0.0, e.what()};
                 }
               });

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (outcomes[a].ok != outcomes[b].ok) return outcomes[a].ok;
    if (!outcomes[a].ok) return false;
    return lower_is_better(metric) ? outcomes[a].val < outcomes[b].val
                                   : outcomes[a].val > outcomes[b].val;
  });

  std::ostringstream csv;
  csv << "rank,status,val_" << metric_key(metric)
      << ",learning_rate,hidden,dropout,depth,norm,residual,backbone,error\n";
  std::size_t failures = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Outcome& o = outcomes[order[r]];
    const GridPoint& p = points[order[r]];
    if (!o.ok) ++failures;
    std::string error = o.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    csv << r + 1 << ',' << (o.ok ? "ok" : "failed") << ','
        << (o.ok ? format_number(o.val * kTableScale) : std::string()) << ','
        << format_number(p.train.learning_rate) << ',' << p.model.hidden << ','
        << format_number(p.model.dropout) << ',' << p.model.depth << ','
        << to_string(p.model.norm) << ',' << (p.model.residual ? "true" : "false") << ','
        << to_string(p.model.backbone) << ',' << error << '\n';
  }
  write_text(in.out / "leaderboard.csv", csv.str());

  std::ostringstream md;
  md << "| Rank | lr | Model | val " << metric_title(metric) << " |\n|---|---|---|---|\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const Outcome& o = outcomes[order[r]];
    const GridPoint& p = points[order[r]];
    md << "| " << r + 1 << " | " << format_number(p.train.learning_rate) << " | "
       << describe(p.model) << " | "
       << (o.ok ? format_number(std::round(o.val * kTableScale * 100) / 100) : "failed") << " |\n";
  }

  const bool any_ok = failures < points.size();
  if (any_ok) {
    const GridPoint& winner = points[order.front()];
    Model first;
    const RunResult result = run_seeds(winner.model, winner.train, in.graph, &first);
    md << "\n## Winner\n\n"
       << "lr=" << format_number(winner.train.learning_rate) << ", " << describe(winner.model)
       << ", test over " << winner.train.seeds.size() << " seed(s):\n\n"
       << results_markdown(describe(winner.model), result);
    write_run(in.out, in.config, winner.model, winner.train, in.stats, result, first, log);
  }
  write_text(in.out / "leaderboard.md", md.str());
  log << "wrote leaderboard.csv and leaderboard.md (" << points.size() << " points)\n";
  if (failures > 0) {
    log << failures << " of " << points.size() << " grid points failed:\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!outcomes[i].ok) log << "  " << describe(points[i].model) << ": " << outcomes[i].error << '\n';
    }
    return kExitPartialFailure;
  }
  return 0;
}

int cmd_ablation(const Options& options, std::ostream& log) {
  Loaded in = prepare(options, log);
  const std::vector<AblationRow> rows = run_ablation(in.config.model, in.config.train, in.graph);
  json j = json::array();
  for (const AblationRow& row : rows) {
    j.push_back({{"variant", row.name},
                 {"model", row.config},
                 {"result", to_json(row.result, !in.config.train.deterministic)}});
  }
  write_json(in.out / "ablation.json", j);
  write_text(in.out / "ablation.csv", ablation_csv(rows));
  write_text(in.out / "ablation.md", ablation_markdown(rows));
  log << ablation_markdown(rows) << "wrote ablation.md, ablation.csv, ablation.json to "
      << in.out.string() << '\n';
  return 0;
}

int cmd_bench(const Options& options, std::ostream& log) {
  Loaded in = prepare(options, log);
  std::vector<BenchRow> rows;
  for (Backbone b : {Backbone::kGcn, Backbone::kSsgConv, Backbone::kGcnii}) {
    ModelConfig m = in.config.model;
    m.backbone = b;
    rows.push_back({b, measure_efficiency(m, in.config.train, in.graph)});
  }
  write_text(in.out / "bench.csv", bench_csv(rows));
  write_text(in.out / "bench.md", bench_markdown(rows));
  log << bench_markdown(rows) << "wrote bench.md and bench.csv to " << in.out.string() << '\n';
  return 0;
}

int cmd_eval(const Options& options, std::ostream& log) {
  Loaded in = prepare(options, log);
  const std::filesystem::path ckpt = options.checkpoint.value_or(in.out / "model.ckpt");
  const std::uint64_t seed = in.config.train.seeds.front();
  ModelConfig mc = in.config.model;
  mc.seed = seed;
  Model model = build_model(mc, in.graph.num_features(), in.graph.num_labels());
  model.load_state(read_checkpoint(ckpt));
  const Split split = make_split(in.graph, seed);
  const MetricsReport report =
      evaluate(model, in.graph, normalize_adjacency(in.graph), split.test);
  const json j{{"checkpoint", ckpt.string()},
               {"seed", seed},
               {"dataset", stats_json(in.stats)},
               {"test", to_json(report)}};
  write_json(in.out / "eval.json", j);
  log << j.dump(2) << '\n';
  return 0;
}

int cmd_synth(const SynthOptions& options, std::ostream& log) {
  validate(options.spec);
  const Graph graph = generate_synthetic(options.spec, options.seed);
  save_dataset(graph, options.out);
  save_split(make_split(graph, options.seed), options.out / "split.json");
  log << format_stats(stats_of(graph)) << '\n';
  log << "wrote dataset to " << options.out.string() << '\n';
  return 0;
}

}  // namespace mlnc::cli
