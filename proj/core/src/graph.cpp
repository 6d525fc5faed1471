#include "mlnc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mlnc/rng.hpp"

namespace mlnc {

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges, Tensor2 features,
                        Tensor2 labels) {
  if (features.rows() != num_nodes) {
    throw std::invalid_argument("features have " + std::to_string(features.rows()) +
                                " rows, expected " + std::to_string(num_nodes));
  }
  if (labels.rows() != num_nodes) {
    throw std::invalid_argument("labels have " + std::to_string(labels.rows()) +
                                " rows, expected " + std::to_string(num_nodes));
  }
  for (double v : labels.data()) {
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("labels must be 0 or 1");
  }
  if (!features.all_finite()) throw std::invalid_argument("features contain non-finite values");

  std::vector<Edge> arcs;
  arcs.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw std::out_of_range("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") out of range for " + std::to_string(num_nodes) + " nodes");
    }
    if (u == v) continue;
    arcs.emplace_back(u, v);
    arcs.emplace_back(v, u);
  }
  std::sort(arcs.begin(), arcs.end());
  arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

  Graph g;
  g.adjacency_.offsets.assign(num_nodes + 1, 0);
  g.adjacency_.indices.reserve(arcs.size());
  for (const auto& [u, v] : arcs) {
    ++g.adjacency_.offsets[u + 1];
    g.adjacency_.indices.push_back(v);
  }
  std::partial_sum(g.adjacency_.offsets.begin(), g.adjacency_.offsets.end(),
                   g.adjacency_.offsets.begin());
  g.features_ = std::move(features);
  g.labels_ = std::move(labels);
  return g;
}

std::vector<Edge> Graph::undirected_edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t u = 0; u < num_nodes(); ++u) {
    for (NodeId v : adjacency_.row(u)) {
      if (u < v) out.emplace_back(static_cast<NodeId>(u), v);
    }
  }
  return out;
}

void Graph::validate() const {
  const auto& offs = adjacency_.offsets;
  const std::size_t n = num_nodes();
  if (offs.empty() || offs.front() != 0) throw std::logic_error("CSR offsets must start at 0");
  if (offs.back() != adjacency_.indices.size()) {
    throw std::logic_error("last CSR offset does not equal the arc count");
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (offs[r + 1] < offs[r]) throw std::logic_error("CSR offsets decrease");
    auto row = adjacency_.row(r);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] >= n) throw std::logic_error("column index out of range");
      if (row[k] == r) throw std::logic_error("self-loop stored in adjacency");
      if (k > 0 && row[k] <= row[k - 1]) {
        throw std::logic_error("row " + std::to_string(r) + " is unsorted or has duplicates");
      }
      auto back = adjacency_.row(row[k]);
      if (!std::binary_search(back.begin(), back.end(), static_cast<NodeId>(r))) {
        throw std::logic_error("adjacency is not symmetric");
      }
    }
  }
  if (features_.rows() != n || labels_.rows() != n) {
    throw std::logic_error("feature/label row count differs from node count");
  }
  for (double v : labels_.data()) {
    if (v != 0.0 && v != 1.0) throw std::logic_error("non-binary label");
  }
}

Tensor2 NormalizedAdjacency::to_dense() const {
  const std::size_t n = num_nodes();
  Tensor2 out(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = structure.offsets[r]; k < structure.offsets[r + 1]; ++k) {
      out(r, structure.indices[k]) = values[k];
    }
  }
  return out;
}

NormalizedAdjacency normalize_adjacency(const Graph& graph) {
  const std::size_t n = graph.num_nodes();
  const Csr& a = graph.adjacency();

  // One sqrt of the integer product keeps simple cases exact (2-node graph gives 0.5).
  std::vector<double> deg(n);
  for (std::size_t i = 0; i < n; ++i) deg[i] = static_cast<double>(a.row(i).size() + 1);

  NormalizedAdjacency out;
  out.structure.offsets.assign(n + 1, 0);
  out.structure.indices.reserve(a.num_entries() + n);
  out.values.reserve(a.num_entries() + n);
  for (std::size_t i = 0; i < n; ++i) {
    bool diag_done = false;
    auto emit = [&](NodeId j) {
      out.structure.indices.push_back(j);
      out.values.push_back(1.0 / std::sqrt(deg[i] * deg[j]));
    };
    for (NodeId j : a.row(i)) {
      if (!diag_done && j > i) {
        emit(static_cast<NodeId>(i));
        diag_done = true;
      }
      emit(j);
    }
    if (!diag_done) emit(static_cast<NodeId>(i));
    out.structure.offsets[i + 1] = out.structure.indices.size();
  }
  return out;
}

Tensor2 spmm(const NormalizedAdjacency& adj, const Tensor2& dense) {
  const std::size_t n = adj.num_nodes();
  if (dense.rows() != n) {
    throw ShapeError("spmm: adjacency over " + std::to_string(n) + " nodes times " +
                     dense.shape_string());
  }
  const std::size_t h = dense.cols();
  Tensor2 out(n, h);
  const auto& offs = adj.structure.offsets;
  const auto& idx = adj.structure.indices;
  for (std::size_t r = 0; r < n; ++r) {
    auto dst = out.row(r);
    for (std::size_t k = offs[r]; k < offs[r + 1]; ++k) {
      const double w = adj.values[k];
      auto src = dense.row(idx[k]);
      for (std::size_t c = 0; c < h; ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

Split make_split(std::size_t num_nodes, std::uint64_t seed) {
  if (num_nodes < 5) {
    throw std::invalid_argument("make_split needs at least 5 nodes, got " +
                                std::to_string(num_nodes));
  }
  std::vector<std::size_t> perm(num_nodes);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const auto n = static_cast<double>(num_nodes);
  const auto n_train = static_cast<std::size_t>(std::lround(0.6 * n));
  const auto n_val = static_cast<std::size_t>(std::lround(0.2 * n));

  Split s;
  s.seed = seed;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void validate_split(const Split& split, std::size_t num_nodes) {
  std::vector<int> seen(num_nodes, 0);
  for (const auto* part : {&split.train, &split.val, &split.test}) {
    for (std::size_t id : *part) {
      if (id >= num_nodes) {
        throw std::invalid_argument("split node id " + std::to_string(id) + " out of range");
      }
      if (seen[id]++) throw std::invalid_argument("split lists overlap at node " + std::to_string(id));
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw std::invalid_argument("split does not cover every node");
  }
}

}  // namespace mlnc
