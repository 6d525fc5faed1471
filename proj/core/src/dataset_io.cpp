#include "mlnc/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace mlnc {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const fs::path& file, std::size_t line, const std::string& msg) {
  throw DatasetError(file.filename().string() + ":" + std::to_string(line) + ": " + msg);
}

std::ifstream open_input(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetError("cannot open " + file.string());
  return in;
}

std::string_view strip(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

// Reads a comma-separated matrix; every line must have the same width.
Tensor2 read_matrix(const fs::path& file, bool binary) {
  auto in = open_input(file);
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = strip(line);
    if (rest.empty()) continue;
    std::size_t count = 0;
    while (true) {
      auto comma = rest.find(',');
      std::string_view cell = strip(rest.substr(0, comma));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        fail(file, line_no, "cannot parse '" + std::string(cell) + "' as a number");
      }
      if (binary && v != 0.0 && v != 1.0) {
        fail(file, line_no, "label value '" + std::string(cell) + "' is not 0 or 1");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (rows == 0) {
      width = count;
    } else if (count != width) {
      fail(file, line_no,
           "expected " + std::to_string(width) + " columns, found " + std::to_string(count));
    }
    ++rows;
  }
  return Tensor2(rows, width, std::move(values));
}

std::vector<Edge> read_edges(const fs::path& file, std::size_t num_nodes) {
  auto in = open_input(file);
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = strip(line);
    if (s.empty()) continue;
    auto parse_id = [&](std::string_view& rest) -> NodeId {
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
      if (ec != std::errc() || ptr == rest.data()) fail(file, line_no, "malformed edge line");
      if (v >= num_nodes) {
        fail(file, line_no,
             "node id " + std::to_string(v) + " out of range [0, " + std::to_string(num_nodes) + ")");
      }
      rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
      return static_cast<NodeId>(v);
    };
    const NodeId src = parse_id(s);
    if (s.empty() || (s.front() != '\t' && s.front() != ' ')) fail(file, line_no, "malformed edge line");
    s = strip(s);
    const NodeId dst = parse_id(s);
    if (!strip(s).empty()) fail(file, line_no, "trailing characters on edge line");
    edges.emplace_back(src, dst);
  }
  return edges;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DatasetStats stats_of(const Graph& graph) {
  return {graph.num_nodes(), graph.num_edges(), graph.num_features(), graph.num_labels()};
}

std::string format_stats(const DatasetStats& s) {
  std::ostringstream os;
  os << "N=" << s.num_nodes << " |E|=" << s.num_edges << " d=" << s.num_features
     << " C=" << s.num_labels;
  return os.str();
}

Graph load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DatasetError("dataset directory not found: " + dir.string());
  Tensor2 features = read_matrix(dir / "features.csv", false);
  Tensor2 labels = read_matrix(dir / "labels.csv", true);
  const std::size_t n = features.rows();
  if (labels.rows() != n) {
    throw DatasetError("labels.csv has " + std::to_string(labels.rows()) +
                       " rows but features.csv has " + std::to_string(n));
  }

  const fs::path meta_file = dir / "meta.json";
  if (fs::exists(meta_file)) {
    nlohmann::json meta;
    try {
      std::ifstream in(meta_file);
      meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("meta.json: " + std::string(e.what()));
    }
    auto check = [&](const char* key, std::size_t actual) {
      if (meta.contains(key) && meta.at(key).get<std::size_t>() != actual) {
        throw DatasetError(std::string("meta.json: ") + key + " = " +
                           std::to_string(meta.at(key).get<std::size_t>()) +
                           " but files contain " + std::to_string(actual));
      }
    };
    check("num_nodes", n);
    check("num_features", features.cols());
    check("num_labels", labels.cols());
  }

  std::vector<Edge> edges = read_edges(dir / "edges.tsv", n);
  return Graph::from_edges(n, edges, std::move(features), std::move(labels));
}

void save_dataset(const Graph& graph, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "edges.tsv");
    for (const auto& [u, v] : graph.undirected_edges()) out << u << '\t' << v << '\n';
  }
  auto write_matrix = [](const fs::path& file, const Tensor2& m, bool integral) {
    std::ofstream out(file);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c) out << ',';
        if (integral) {
          out << static_cast<int>(m(r, c));
        } else {
          out << format_real(m(r, c));
        }
      }
      out << '\n';
    }
    if (!out) throw DatasetError("failed writing " + file.string());
  };
  write_matrix(dir / "features.csv", graph.features(), false);
  write_matrix(dir / "labels.csv", graph.labels(), true);

  nlohmann::json meta = {{"num_nodes", graph.num_nodes()},
                         {"num_features", graph.num_features()},
                         {"num_labels", graph.num_labels()}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';
}

nlohmann::json split_to_json(const Split& split) {
  return {{"seed", split.seed}, {"train", split.train}, {"val", split.val}, {"test", split.test}};
}

Split split_from_json(const nlohmann::json& j) {
  Split s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.train = j.at("train").get<std::vector<std::size_t>>();
  s.val = j.at("val").get<std::vector<std::size_t>>();
  s.test = j.at("test").get<std::vector<std::size_t>>();
  return s;
}

void save_split(const Split& split, const fs::path& file) {
  std::ofstream out(file);
  out << split_to_json(split).dump() << '\n';
  if (!out) throw DatasetError("failed writing " + file.string());
}

Split load_split(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetError("cannot open " + file.string());
  return split_from_json(nlohmann::json::parse(in));
}

}  // namespace mlnc
