#include "mlnc/cli/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mlnc::cli {

namespace {

std::string two_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string optional_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string();
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_cell(const Aggregate& a) {
  std::string out = two_decimals(a.mean * kTableScale);
  if (a.std) out += " ± " + two_decimals(*a.std * kTableScale);
  return out;
}

std::string describe(const ModelConfig& c) {
  std::ostringstream s;
  s << to_string(c.backbone) << " K=" << c.depth << " h=" << c.hidden << " "
    << to_string(c.norm) << (c.residual ? " res" : " nores") << " dropout="
    << format_number(c.dropout);
  return s.str();
}

std::string results_csv(const RunResult& r) {
  std::ostringstream s;
  s << "row,seed";
  for (Metric m : kAllMetrics) s << ',' << metric_key(m);
  s << ",selected_epoch,epochs_run,final_train_loss,train_ms_per_epoch,inference_ms\n";
  for (const SeedResult& sr : r.seeds) {
    s << "seed," << sr.seed;
    for (Metric m : kAllMetrics) s << ',' << format_number(sr.test.get(m) * kTableScale);
    s << ',' << sr.selected_epoch << ',' << sr.epochs_run << ','
      << format_number(sr.final_train_loss) << ',' << format_number(sr.train_ms_per_epoch) << ','
      << format_number(sr.inference_ms) << '\n';
  }
  s << "mean,";
  for (Metric m : kAllMetrics) s << ',' << format_number(r.aggregate(m).mean * kTableScale);
  s << ",,,,,\n";
  s << "std,";
  for (Metric m : kAllMetrics) {
    const auto& sd = r.aggregate(m).std;
    s << ',' << optional_number(sd ? std::optional<double>(*sd * kTableScale) : std::nullopt);
  }
  s << ",,,,,\n";
  return s.str();
}

std::string results_markdown(const std::string& model_label, const RunResult& r) {
  std::ostringstream s;
  s << "| Model |";
  for (Metric m : kAllMetrics) s << ' ' << metric_title(m) << (lower_is_better(m) ? " ↓" : " ↑") << " |";
  s << "\n|---|";
  for (std::size_t i = 0; i < kAllMetrics.size(); ++i) s << "---|";
  s << "\n| " << model_label << " |";
  for (Metric m : kAllMetrics) s << ' ' << format_cell(r.aggregate(m)) << " |";
  s << "\n\nValues are x100, mean ± sample std over " << r.seeds.size() << " seed(s).\n";
  return s.str();
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream s;
  s << "variant";
  for (Metric m : kAblationMetrics) s << ',' << metric_key(m) << "_mean," << metric_key(m) << "_std";
  s << '\n';
  for (const AblationRow& row : rows) {
    s << row.name;
    for (Metric m : kAblationMetrics) {
      const Aggregate& a = row.result.aggregate(m);
      s << ',' << format_number(a.mean * kTableScale) << ','
        << optional_number(a.std ? std::optional<double>(*a.std * kTableScale) : std::nullopt);
    }
    s << '\n';
  }
  return s.str();
}

std::string ablation_markdown(const std::vector<AblationRow>& rows) {
  std::ostringstream s;
  s << "| Model Variant |";
  for (Metric m : kAblationMetrics) s << ' ' << metric_title(m) << " ↑ |";
  s << "\n|---|---|---|---|\n";
  for (const AblationRow& row : rows) {
    s << "| " << row.name << " |";
    for (Metric m : kAblationMetrics) s << ' ' << format_cell(row.result.aggregate(m)) << " |";
    s << '\n';
  }
  return s.str();
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream s;
  s << "backbone,train_ms_per_epoch,inference_ms,peak_rss_mb\n";
  for (const BenchRow& r : rows) {
    s << to_string(r.backbone) << ',' << format_number(r.report.train_ms_per_epoch) << ','
      << format_number(r.report.inference_ms) << ',' << format_number(r.report.peak_rss_mb) << '\n';
  }
  return s.str();
}

std::string bench_markdown(const std::vector<BenchRow>& rows) {
  std::ostringstream s;
  s << "| Backbone | Train ms/epoch | Inference ms | Peak RSS (MiB) |\n|---|---|---|---|\n";
  for (const BenchRow& r : rows) {
    s << "| " << to_string(r.backbone) << " | " << two_decimals(r.report.train_ms_per_epoch)
      << " | " << two_decimals(r.report.inference_ms) << " | "
      << two_decimals(r.report.peak_rss_mb) << " |\n";
  }
  s << "\nMedians over " << kEfficiencyRepeats
    << " repeats. Peak RSS is the process high-water mark so far.\n";
  return s.str();
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
  write_text(file, j.dump(2) + "\n");
}

nlohmann::json stats_json(const DatasetStats& s) {
  return {{"num_nodes", s.num_nodes},
          {"num_edges", s.num_edges},
          {"num_features", s.num_features},
          {"num_labels", s.num_labels}};
}

}  // namespace mlnc::cli
