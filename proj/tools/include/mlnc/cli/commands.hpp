#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mlnc/cli/experiment.hpp"

namespace mlnc::cli {

// Exit codes besides 0 (success) and 1 (error).
inline constexpr int kExitGridGated = 2;
inline constexpr int kExitPartialFailure = 3;

// Grids above this many points need --full-grid.
inline constexpr std::size_t kGridGate = 64;

// Command-line flags. Each one that is set overrides the matching config
// field: --out -> output_dir, --seeds -> train.seeds, --workers ->
// train.workers, --deterministic -> train.deterministic.
struct Options {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::vector<std::uint64_t>> seeds;
  bool deterministic = false;
  std::optional<std::size_t> workers;
  bool full_grid = false;
  std::optional<std::filesystem::path> checkpoint;  // eval only
};

ExperimentConfig apply_overrides(ExperimentConfig config, const Options& options);

// Each command logs progress to `log` and returns the process exit code.
// Errors are thrown; main() maps them to exit code 1.
int cmd_train(const Options& options, std::ostream& log);
int cmd_grid(const Options& options, std::ostream& log);
int cmd_ablation(const Options& options, std::ostream& log);
int cmd_bench(const Options& options, std::ostream& log);
int cmd_eval(const Options& options, std::ostream& log);

struct SynthOptions {
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

// Writes the generated graph and split.json (split drawn with the same seed).
int cmd_synth(const SynthOptions& options, std::ostream& log);

}  // namespace mlnc::cli
