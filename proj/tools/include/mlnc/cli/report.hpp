#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlnc/backbones.hpp"
#include "mlnc/dataset_io.hpp"
#include "mlnc/trainer.hpp"

namespace mlnc::cli {

// Shortest text that parses back to the same double.
std::string format_number(double v);
// "12.31 ± 0.51" on the table scale, or "12.31" when the std is absent.
std::string format_cell(const Aggregate& a);
// "gcn K=2 h=64 batch res dropout=0.5"
std::string describe(const ModelConfig& c);

// One row per seed, then "mean" and "std" rows; metrics on the table scale.
std::string results_csv(const RunResult& r);
// Seven metric columns in the usual table order, "mean ± std" cells.
std::string results_markdown(const std::string& model_label, const RunResult& r);

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string ablation_markdown(const std::vector<AblationRow>& rows);

struct BenchRow {
  Backbone backbone;
  EfficiencyReport report;
};
std::string bench_csv(const std::vector<BenchRow>& rows);
std::string bench_markdown(const std::vector<BenchRow>& rows);

void write_text(const std::filesystem::path& file, const std::string& text);
void write_json(const std::filesystem::path& file, const nlohmann::json& j);

nlohmann::json stats_json(const DatasetStats& s);

}  // namespace mlnc::cli
