#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "mlnc/graph.hpp"
#include "oracles.hpp"

namespace mlnc {
namespace {

Graph graph_of(std::size_t n, std::vector<Edge> edges) {
  return Graph::from_edges(n, edges, Tensor2(n, 1, 1.0), Tensor2(n, 1, 1.0));
}

TEST(Graph, FromEdgesSymmetrizesDedupsAndDropsSelfLoops) {
  const Graph g = graph_of(4, {{0, 1}, {1, 0}, {0, 1}, {2, 2}, {3, 1}});
  EXPECT_EQ(g.num_nodes(), 4u);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.num_arcs(), 4u);
  EXPECT_EQ(g.degree(1), 2u);
  EXPECT_EQ(g.degree(2), 0u);
  EXPECT_EQ(g.undirected_edges(), (std::vector<Edge>{{0, 1}, {1, 3}}));
  EXPECT_NO_THROW(g.validate());
}

TEST(Graph, RejectsBadInput) {
  EXPECT_THROW(graph_of(2, {{0, 2}}), std::out_of_range);
  EXPECT_THROW(Graph::from_edges(2, {}, Tensor2(3, 1), Tensor2(2, 1)), std::invalid_argument);
  EXPECT_THROW(Graph::from_edges(2, {}, Tensor2(2, 1), Tensor2(2, 1, 0.5)), std::invalid_argument);
}

TEST(Graph, CsrInvariantsOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Graph g = oracle::random_graph(5 + seed, 2, 2, 0.3, seed);
    const Csr& a = g.adjacency();
    ASSERT_EQ(a.offsets.back(), a.num_entries());
    for (std::size_t r = 0; r < a.num_rows(); ++r) {
      const auto row = a.row(r);
      EXPECT_TRUE(std::is_sorted(row.begin(), row.end()));
      EXPECT_EQ(std::adjacent_find(row.begin(), row.end()), row.end());
      for (NodeId c : row) {
        const auto back = a.row(c);
        EXPECT_TRUE(std::binary_search(back.begin(), back.end(), static_cast<NodeId>(r)));
      }
    }
  }
}

TEST(NormalizeAdjacency, TwoNodeGraphIsAllHalf) {
  const Tensor2 d = normalize_adjacency(graph_of(2, {{0, 1}})).to_dense();
  EXPECT_EQ(d, Tensor2::from_rows({{0.5, 0.5}, {0.5, 0.5}}));
}

TEST(NormalizeAdjacency, IsolatedNodeKeepsUnitSelfLoop) {
  const NormalizedAdjacency a = normalize_adjacency(graph_of(1, {}));
  EXPECT_EQ(a.to_dense(), Tensor2::from_rows({{1.0}}));
  const Tensor2 d = normalize_adjacency(graph_of(3, {{0, 1}})).to_dense();
  EXPECT_EQ(d(2, 2), 1.0);
  EXPECT_EQ(d(2, 0), 0.0);
}

TEST(NormalizeAdjacency, PathGraphByHand) {
  const Tensor2 d = normalize_adjacency(graph_of(3, {{0, 1}, {1, 2}})).to_dense();
  EXPECT_NEAR(d(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(d(0, 1), 0.40825, 1e-5);
  EXPECT_NEAR(d(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d(0, 0), 0.5, 1e-15);
  EXPECT_EQ(d(0, 2), 0.0);
}

TEST(NormalizeAdjacency, MatchesDenseOracleOnRandomGraphs) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> size(1, 32);
  std::uniform_real_distribution<double> density(0.0, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = oracle::random_graph(size(rng), 2, 2, density(rng), 1000 + trial);
    const NormalizedAdjacency a = normalize_adjacency(g);
    const Tensor2 dense = a.to_dense();
    const Tensor2 expected = oracle::dense_normalized_adjacency(g);
    for (std::size_t i = 0; i < dense.rows(); ++i) {
      EXPECT_GT(dense(i, i), 0.0);
      for (std::size_t j = 0; j < dense.cols(); ++j) {
        EXPECT_NEAR(dense(i, j), expected(i, j), 1e-12);
        EXPECT_EQ(dense(i, j), dense(j, i));
      }
    }
    for (std::size_t r = 0; r < a.num_nodes(); ++r) {
      const auto row = a.structure.row(r);
      EXPECT_TRUE(std::is_sorted(row.begin(), row.end()));
      EXPECT_TRUE(std::binary_search(row.begin(), row.end(), static_cast<NodeId>(r)));
    }
  }
}

TEST(Spmm, IdentityAndSmallExample) {
  const NormalizedAdjacency eye = normalize_adjacency(graph_of(3, {}));
  const Tensor2 x = Tensor2::from_rows({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(spmm(eye, x), x);
  const NormalizedAdjacency two = normalize_adjacency(graph_of(2, {{0, 1}}));
  EXPECT_EQ(spmm(two, Tensor2::from_rows({{2}, {0}})), Tensor2::from_rows({{1}, {1}}));
  EXPECT_THROW(spmm(two, x), ShapeError);
}

TEST(Spmm, MatchesDenseProduct) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = oracle::random_graph(8 + trial % 10, 2, 2, 0.35, 77 + trial);
    const NormalizedAdjacency a = normalize_adjacency(g);
    Tensor2 m(g.num_nodes(), 3);
    for (double& v : m.data()) v = n(rng);
    const Tensor2 got = spmm(a, m);
    const Tensor2 want = oracle::dense_matmul(oracle::dense_normalized_adjacency(g), m);
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got.data()[i], want.data()[i], 1e-12 * std::max(1.0, std::abs(want.data()[i])));
    }
    EXPECT_EQ(spmm(a, m), got);
  }
}

TEST(Split, SizesFollowSixTwoTwo) {
  const Split s = make_split(10, 123);
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.val.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
  const Split big = make_split(3106, 0);
  EXPECT_EQ(big.train.size(), 1864u);
  EXPECT_EQ(big.val.size(), 621u);
  EXPECT_EQ(big.test.size(), 621u);
}

TEST(Split, PartitionAndDeterminismOnRandomInputs) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> size(5, 400);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = size(rng);
    const std::uint64_t seed = rng();
    const Split s = make_split(n, seed);
    EXPECT_EQ(s, make_split(n, seed));
    EXPECT_NO_THROW(validate_split(s, n));
    EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::lround(0.6 * n)));
    EXPECT_EQ(s.val.size(), static_cast<std::size_t>(std::lround(0.2 * n)));
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    EXPECT_EQ(all.size(), n);
    EXPECT_EQ(*all.rbegin(), n - 1);
  }
  EXPECT_NE(make_split(100, 1).train, make_split(100, 2).train);
}

TEST(Split, RejectsTinyGraphsAndBrokenPartitions) {
  EXPECT_THROW(make_split(4, 0), std::invalid_argument);
  Split s = make_split(10, 0);
  s.test.push_back(s.train.front());
  EXPECT_THROW(validate_split(s, 10), std::invalid_argument);
  Split missing = make_split(10, 0);
  missing.test.pop_back();
  EXPECT_THROW(validate_split(missing, 10), std::invalid_argument);
}

}  // namespace
}  // namespace mlnc
