#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlnc/cli/commands.hpp"
#include "mlnc/cli/experiment.hpp"

namespace {

using mlnc::cli::Options;

void add_common(CLI::App* cmd, Options& o, std::vector<std::uint64_t>& seeds, std::size_t& workers) {
  cmd->add_option("--config", o.config, "experiment JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides output_dir)");
  cmd->add_option("--seeds", seeds, "comma-separated seeds (overrides train.seeds)")->delimiter(',');
  cmd->add_flag("--deterministic", o.deterministic, "omit wall-clock fields from results.json");
  cmd->add_option("--workers", workers, "concurrent runs, 0 = all cores (overrides train.workers)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mlnc: multi-label node classification with GCN, SSGConv and GCNII"};
  app.require_subcommand(1);

  Options opts;
  std::vector<std::uint64_t> seeds;
  std::size_t workers = 0;

  auto* train = app.add_subcommand("train", "train over all seeds and write results");
  auto* grid = app.add_subcommand("grid", "grid search on validation, then test the winner");
  auto* ablation = app.add_subcommand("ablation", "Basic / w/o Dropout / w/o Residual / w/o Norm / Full");
  auto* bench = app.add_subcommand("bench", "epoch and inference timings per backbone");
  auto* eval = app.add_subcommand("eval", "metrics of a saved checkpoint on the test split");
  for (auto* cmd : {train, grid, ablation, bench, eval}) add_common(cmd, opts, seeds, workers);
  grid->add_flag("--full-grid", opts.full_grid, "allow grids above the size gate");
  eval->add_option("--checkpoint", opts.checkpoint, "checkpoint file (default <out>/model.ckpt)");

  mlnc::cli::SynthOptions synth_opts;
  std::string synth_config;
  auto* synth = app.add_subcommand("synth", "generate a planted multi-label graph");
  synth->add_option("--out", synth_opts.out, "dataset directory")->required();
  synth->add_option("--config", synth_config, "experiment JSON with a synthetic section")
      ->check(CLI::ExistingFile);
  auto& s = synth_opts.spec;
  auto* nodes = synth->add_option("--nodes", s.num_nodes);
  auto* labels = synth->add_option("--labels", s.num_labels);
  auto* features = synth->add_option("--features", s.num_features);
  auto* prevalence = synth->add_option("--prevalence", s.prevalence);
  auto* p_intra = synth->add_option("--p-intra", s.p_intra);
  auto* p_inter = synth->add_option("--p-inter", s.p_inter);
  auto* noise = synth->add_option("--noise", s.noise);
  auto* seed = synth->add_option("--seed", synth_opts.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto* cmd : {train, grid, ablation, bench, eval}) {
      if (!cmd->parsed()) continue;
      if (!seeds.empty()) opts.seeds = seeds;
      if (cmd->count("--workers") > 0) opts.workers = workers;
      if (cmd == train) return mlnc::cli::cmd_train(opts, std::cout);
      if (cmd == grid) return mlnc::cli::cmd_grid(opts, std::cout);
      if (cmd == ablation) return mlnc::cli::cmd_ablation(opts, std::cout);
      if (cmd == bench) return mlnc::cli::cmd_bench(opts, std::cout);
      return mlnc::cli::cmd_eval(opts, std::cout);
    }
    if (!synth_config.empty()) {
      // File values first, then any explicit flag on top.
      const auto cfg = mlnc::cli::load_experiment(synth_config);
      if (!cfg.synthetic) throw mlnc::cli::ConfigError("synthetic section missing in " + synth_config);
      const mlnc::SyntheticSpec flags = s;
      const std::uint64_t flag_seed = synth_opts.seed;
      s = cfg.synthetic->spec;
      synth_opts.seed = cfg.synthetic->seed;
      if (nodes->count()) s.num_nodes = flags.num_nodes;
      if (labels->count()) s.num_labels = flags.num_labels;
      if (features->count()) s.num_features = flags.num_features;
      if (prevalence->count()) s.prevalence = flags.prevalence;
      if (p_intra->count()) s.p_intra = flags.p_intra;
      if (p_inter->count()) s.p_inter = flags.p_inter;
      if (noise->count()) s.noise = flags.noise;
      if (seed->count()) synth_opts.seed = flag_seed;
    }
    return mlnc::cli::cmd_synth(synth_opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
