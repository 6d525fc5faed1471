#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mlnc/tensor.hpp"

namespace mlnc {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

// Compressed sparse rows. Column indices within a row are sorted ascending.
struct Csr {
  std::vector<std::size_t> offsets{0};
  std::vector<NodeId> indices;

  std::size_t num_rows() const { return offsets.size() - 1; }
  std::size_t num_entries() const { return indices.size(); }
  std::span<const NodeId> row(std::size_t r) const {
    return {indices.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
};

// Immutable undirected graph with node features X (N x d) and multi-hot
// labels Y (N x C). Each undirected edge is stored as two arcs.
class Graph {
 public:
  Graph() = default;

  // Self-loops are dropped, every edge is symmetrized, duplicates removed.
  // Throws std::out_of_range for endpoints >= num_nodes and
  // std::invalid_argument for feature/label shape or value problems.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges, Tensor2 features,
                          Tensor2 labels);

  std::size_t num_nodes() const { return adjacency_.num_rows(); }
  std::size_t num_arcs() const { return adjacency_.num_entries(); }
  std::size_t num_edges() const { return adjacency_.num_entries() / 2; }
  std::size_t num_features() const { return features_.cols(); }
  std::size_t num_labels() const { return labels_.cols(); }
  std::size_t degree(NodeId v) const { return adjacency_.row(v).size(); }

  const Csr& adjacency() const { return adjacency_; }
  const Tensor2& features() const { return features_; }
  const Tensor2& labels() const { return labels_; }

  // Each undirected edge once, as (i, j) with i < j, in CSR order.
  std::vector<Edge> undirected_edges() const;

  // Re-checks every structural invariant; throws std::logic_error on violation.
  void validate() const;

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.adjacency_.offsets == b.adjacency_.offsets &&
           a.adjacency_.indices == b.adjacency_.indices && a.features_ == b.features_ &&
           a.labels_ == b.labels_;
  }

 private:
  Csr adjacency_;
  Tensor2 features_;
  Tensor2 labels_;
};

// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
struct NormalizedAdjacency {
  Csr structure;
  std::vector<double> values;

  std::size_t num_nodes() const { return structure.num_rows(); }
  Tensor2 to_dense() const;
};

NormalizedAdjacency normalize_adjacency(const Graph& graph);

// Sparse-dense product adj * dense. Rows are accumulated in column-index order,
// so results are bit-identical between runs.
Tensor2 spmm(const NormalizedAdjacency& adj, const Tensor2& dense);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  friend bool operator==(const Split&, const Split&) = default;
};

// Uniform random 6:2:2 partition: |train| = round(0.6 N), |val| = round(0.2 N),
// the remainder goes to test. Each list is sorted. Requires N >= 5.
Split make_split(std::size_t num_nodes, std::uint64_t seed);
inline Split make_split(const Graph& graph, std::uint64_t seed) {
  return make_split(graph.num_nodes(), seed);
}

// Throws std::invalid_argument unless the split partitions {0..N-1}.
void validate_split(const Split& split, std::size_t num_nodes);

}  // namespace mlnc
