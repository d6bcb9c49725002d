#include <algorithm>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "safeset/rng.hpp"
#include "safeset/transition_graph.hpp"

using namespace safeset;
using Id = TransitionGraph::Vertex;

namespace {

// Independent oracle: boolean transitive closure by repeated squaring-free
// relaxation. reach[i][j] == true iff a directed path i -> ... -> j exists.
std::vector<std::vector<bool>> closure(int n, const std::set<std::pair<Id, Id>>& edges) {
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (auto [a, b] : edges) reach[a][b] = true;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  return reach;
}

std::vector<Id> oracle_ancestors(int n, const std::set<std::pair<Id, Id>>& edges, Id t) {
  auto reach = closure(n, edges);
  std::vector<Id> out;
  for (int v = 0; v < n; ++v)
    if (static_cast<Id>(v) == t || reach[v][t]) out.push_back(static_cast<Id>(v));
  return out;
}

}  // namespace

TEST_CASE("empty graph: a vertex is its own only ancestor") {
  TransitionGraph g;
  REQUIRE(g.ancestors(5) == std::vector<Id>{5});
  REQUIRE(g.edge_count() == 0);
}

TEST_CASE("chain ancestry") {
  TransitionGraph g;
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 3);
  REQUIRE(g.ancestors(3) == std::vector<Id>{0, 1, 2, 3});
  REQUIRE(g.ancestors(0) == std::vector<Id>{0});
  REQUIRE(g.ancestors(1) == std::vector<Id>{0, 1});
}

TEST_CASE("diamond converges") {
  TransitionGraph g;
  g.add_edge(0, 1);
  g.add_edge(0, 2);
  g.add_edge(1, 3);
  g.add_edge(2, 3);
  REQUIRE(g.ancestors(3) == std::vector<Id>{0, 1, 2, 3});
}

TEST_CASE("cycles terminate and include the whole loop") {
  TransitionGraph g;
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 0);
  for (Id t : {0u, 1u, 2u}) REQUIRE(g.ancestors(t) == std::vector<Id>{0, 1, 2});
}

TEST_CASE("self-loops do not duplicate") {
  TransitionGraph g;
  g.add_edge(7, 7);
  REQUIRE(g.ancestors(7) == std::vector<Id>{7});
  REQUIRE(g.edge_count() == 1);
}

TEST_CASE("duplicate edges collapse") {
  TransitionGraph g;
  g.add_edge(1, 2);
  g.add_edge(1, 2);
  REQUIRE(g.edge_count() == 1);
  REQUIRE(g.has_edge(1, 2));
  REQUIRE(!g.has_edge(2, 1));
}

TEST_CASE("ancestors match brute-force closure on random graphs") {
  Rng rng(424242);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 2 + static_cast<int>(uniform_index(rng, 9));  // 2..10 vertices
    std::set<std::pair<Id, Id>> edges;
    int m = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n * n)));
    TransitionGraph g;
    for (int e = 0; e < m; ++e) {
      Id a = static_cast<Id>(uniform_index(rng, n));
      Id b = static_cast<Id>(uniform_index(rng, n));
      edges.insert({a, b});
      g.add_edge(a, b);
    }
    REQUIRE(g.edge_count() == edges.size());
    for (int t = 0; t < n; ++t) {
      auto got = g.ancestors(static_cast<Id>(t));
      auto want = oracle_ancestors(n, edges, static_cast<Id>(t));
      REQUIRE(got == want);
    }
  }
}

TEST_CASE("edges listed deterministically in insertion-independent order") {
  TransitionGraph a, b;
  a.add_edge(3, 1);
  a.add_edge(0, 2);
  b.add_edge(0, 2);
  b.add_edge(3, 1);
  REQUIRE(a.edges() == b.edges());
  REQUIRE(a.edges() == std::vector<std::pair<Id, Id>>{{0, 2}, {3, 1}});
}
