#include <doctest.h>

#include <random>

#include "grabnel/algorithms.hpp"
#include "grabnel/constraints.hpp"
#include "grabnel/errors.hpp"
#include "grabnel/graph.hpp"
#include "grabnel/perturbation.hpp"
#include "oracles.hpp"

using namespace grabnel;

namespace {

Graph path(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) e.push_back({static_cast<NodeId>(i), static_cast<NodeId>(i + 1)});
  return Graph::unlabeled(n, e);
}

std::vector<Perturbation> all_structural(const Graph& g) {
  std::vector<Perturbation> out;
  const auto n = static_cast<NodeId>(g.num_nodes());
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = 0; v < n; ++v) {
      if (u < v) out.push_back(Flip{u, v});
      for (NodeId s = 0; s < n; ++s) {
        if (is_valid(g, Rewire{u, v, s})) out.push_back(Rewire{u, v, s});
        if (is_valid(g, Swap{u, v, s})) out.push_back(Swap{u, v, s});
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("graph construction enforces invariants") {
  CHECK_THROWS_AS(Graph::unlabeled(3, {{1, 1}}), InvalidGraph);
  CHECK_THROWS_AS(Graph::unlabeled(3, {{0, 3}}), InvalidGraph);
  CHECK_THROWS_AS(Graph::weighted(3, {{0, 1}}, {-1.0}, DiscreteLabels(3, 0)), InvalidGraph);
  const Graph g = Graph::unlabeled(3, {{1, 0}, {0, 1}, {2, 1}});
  CHECK(g.num_edges() == 2);
  CHECK(g.edges()[0] == Edge{0, 1});
  CHECK(g.has_edge(1, 0));
  CHECK(g.weight(0, 2) == 0.0);
  CHECK(g.weight(1, 2) == 1.0);
  CHECK(g.degree(1) == 2);
}

TEST_CASE("apply_perturbation examples") {
  const Graph triangle = Graph::unlabeled(3, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(apply_perturbation(triangle, Flip{0, 1}) == Graph::unlabeled(3, {{1, 2}, {0, 2}}));

  const Graph p = Graph::unlabeled(3, {{0, 1}});
  CHECK(apply_perturbation(p, Rewire{0, 1, 2}) == Graph::unlabeled(3, {{0, 2}}));
  CHECK_FALSE(is_valid(path(3), Rewire{1, 2, 0}));
  CHECK_THROWS_AS(apply_perturbation(path(3), Rewire{1, 2, 0}), InvalidPerturbation);

  const Graph star = Graph::weighted(3, {{0, 1}, {0, 2}}, {0.3, 0.7}, DiscreteLabels(3, 0));
  const Graph swapped = apply_perturbation(star, Swap{0, 1, 2});
  CHECK(swapped.weight(0, 1) == 0.7);
  CHECK(swapped.weight(0, 2) == 0.3);

  // An absent (u,s) has weight 0, so the swap moves the edge.
  const Graph moved = apply_perturbation(Graph::unlabeled(3, {{0, 1}}), Swap{0, 1, 2});
  CHECK(moved == Graph::unlabeled(3, {{0, 2}}));

  const Graph injected = apply_perturbation(path(2), Inject{std::int64_t{7}, {0, 1}});
  CHECK(injected.num_nodes() == 3);
  CHECK(injected.has_edge(2, 0));
  CHECK(injected.labels()[2] == 7);
}

TEST_CASE("flip twice is the identity") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const Graph g = oracle::random_graph(2 + rng() % 9, 0.4, 3, rng);
    const auto u = static_cast<NodeId>(rng() % g.num_nodes());
    auto v = static_cast<NodeId>(rng() % g.num_nodes());
    if (u == v) v = (v + 1) % static_cast<NodeId>(g.num_nodes());
    const Graph once = apply_perturbation(g, Flip{u, v});
    CHECK(once != g);
    CHECK(apply_perturbation(once, Flip{v, u}) == g);
  }
}

TEST_CASE("edit_distance_from_base cancels reversed flips") {
  CHECK(edit_distance_from_base(EditSet{Flip{0, 1}}) == 1);
  CHECK(edit_distance_from_base(EditSet{Flip{0, 1}, Flip{0, 1}}) == 0);
  CHECK(edit_distance_from_base(EditSet{Flip{0, 1}, Flip{2, 3}, Flip{0, 1}}) == 1);
  CHECK(edit_distance_from_base(EditSet{Flip{0, 1}, Flip{1, 0}}) == 0);
}

TEST_CASE("constraint examples") {
  ConstraintSet two_hop{ConstraintMode::TwoHop};
  CHECK(check_constraint(path(3), Flip{0, 2}, two_hop));
  CHECK_FALSE(check_constraint(path(4), Flip{0, 3}, two_hop));
  CHECK(check_constraint(path(4), Flip{0, 1}, two_hop));  // deletions are unconstrained

  const Graph two = Graph::unlabeled(4, {{0, 1}, {2, 3}});
  ConstraintSet preserve{ConstraintMode::PreserveComponents};
  CHECK_FALSE(check_constraint(two, Flip{1, 2}, preserve));
  CHECK(oracle::dfs_components(apply_perturbation(two, Flip{1, 2})) == 1);

  ConstraintSet rewire_only{ConstraintMode::TwoHopRewire};
  CHECK_FALSE(check_constraint(path(4), Flip{0, 2}, rewire_only));
  CHECK(check_constraint(path(4), Rewire{1, 0, 3}, rewire_only));
  CHECK_FALSE(check_constraint(path(5), Rewire{0, 1, 3}, rewire_only));
}

TEST_CASE("constraint predicates agree with brute-force oracles") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 60; ++t) {
    const Graph g = oracle::random_graph(3 + rng() % 6, 0.35, 1, rng);
    for (const auto& p : all_structural(g)) {
      CHECK(check_constraint(g, p, {ConstraintMode::None}));
      CHECK(check_constraint(g, p, {ConstraintMode::TwoHop}) == oracle::two_hop_admissible(g, p));
      CHECK(check_constraint(g, p, {ConstraintMode::TwoHopRewire}) == oracle::two_hop_rewire_admissible(g, p));
      const bool keeps = check_constraint(g, p, {ConstraintMode::PreserveComponents});
      CHECK(keeps == oracle::preserves_components(g, p));
      if (keeps) CHECK(connected_components(apply_perturbation(g, p)) == connected_components(g));
    }
  }
}

TEST_CASE("injection edge cap") {
  const Graph g = path(4);  // average degree 1.5
  ConstraintSet c;
  CHECK(injection_edge_cap(g, c) == 2);
  CHECK(check_constraint(g, Inject{std::int64_t{0}, {0, 1}}, c));
  CHECK_FALSE(check_constraint(g, Inject{std::int64_t{0}, {0, 1, 2}}, c));
  c.max_edges_per_injected = 3;
  CHECK(check_constraint(g, Inject{std::int64_t{0}, {0, 1, 2}}, c));
}

TEST_CASE("edit sets are checked sequentially") {
  const Graph g = path(3);
  ConstraintSet none;
  CHECK(check_edit_set(g, EditSet{Flip{0, 1}, Flip{0, 2}}, none));
  CHECK_FALSE(check_edit_set(g, EditSet{Flip{0, 1}, Flip{0, 1}}, none));
  // The second rewire needs the edge added by the first.
  CHECK(check_edit_set(g, EditSet{Rewire{0, 1, 2}, Rewire{2, 0, 1}}, none) ==
        is_valid(apply_perturbation(g, Rewire{0, 1, 2}), Rewire{2, 0, 1}));
}

TEST_CASE("connected components") {
  CHECK(connected_components(Graph::unlabeled(4, {})) == 4);
  CHECK(connected_components(Graph::unlabeled(3, {{0, 1}, {1, 2}, {0, 2}})) == 1);
  CHECK(connected_components(Graph::unlabeled(6, {{0, 1}, {2, 3}, {4, 5}})) == 3);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    const Graph g = oracle::random_graph(1 + rng() % 15, 0.15, 1, rng);
    CHECK(connected_components(g) == oracle::dfs_components(g));
    const auto labels = component_labels(g);
    for (const Edge& e : g.edges()) CHECK(labels[e.u] == labels[e.v]);
  }
}

TEST_CASE("two-hop neighbourhoods") {
  const Graph star = Graph::unlabeled(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  CHECK(two_hop_neighbors(star, 1) == std::vector<NodeId>{0, 2, 3, 4});
  CHECK(two_hop_neighbors(path(4), 0) == std::vector<NodeId>{1, 2});
  std::mt19937_64 rng(17);
  for (int t = 0; t < 200; ++t) {
    const Graph g = oracle::random_graph(1 + rng() % 15, 0.2, 1, rng);
    const auto d = oracle::all_pairs_distances(g);
    for (NodeId u = 0; u < static_cast<NodeId>(g.num_nodes()); ++u) {
      std::vector<NodeId> expected;
      for (NodeId v = 0; v < static_cast<NodeId>(g.num_nodes()); ++v) {
        if (d[u][v] == 1 || d[u][v] == 2) expected.push_back(v);
      }
      CHECK(two_hop_neighbors(g, u) == expected);
      const auto bfs = bfs_distances(g, u);
      for (std::size_t v = 0; v < g.num_nodes(); ++v) CHECK(bfs[v] == d[u][v]);
    }
  }
}

TEST_CASE("union-find") {
  UnionFind uf(5);
  CHECK(uf.set_count() == 5);
  CHECK(uf.unite(0, 1));
  CHECK_FALSE(uf.unite(1, 0));
  uf.unite(3, 4);
  CHECK(uf.connected(3, 4));
  CHECK_FALSE(uf.connected(1, 3));
  CHECK(uf.set_count() == 3);
}

TEST_CASE("perturbation text and canonical form") {
  CHECK(canonical(Flip{3, 1}) == Perturbation{Flip{1, 3}});
  CHECK(to_string(Perturbation{Flip{0, 1}}).find("0") != std::string::npos);
  CHECK(parse_attack_mode(to_string(AttackMode::Swap)) == AttackMode::Swap);
  CHECK_THROWS_AS(parse_attack_mode("teleport"), InvalidConfig);
  CHECK(parse_constraint_mode("2hop-rewire") == ConstraintMode::TwoHopRewire);
}
