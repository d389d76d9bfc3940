#include "grabnel/algorithms.hpp"

#include <algorithm>
#include <deque>

namespace grabnel {

std::size_t connected_components(const Graph& g) {
  UnionFind uf(g.num_nodes());
  for (const Edge& e : g.edges()) uf.unite(e.u, e.v);
  return uf.set_count();
}

std::vector<std::size_t> component_labels(const Graph& g) {
  UnionFind uf(g.num_nodes());
  for (const Edge& e : g.edges()) uf.unite(e.u, e.v);
  std::vector<std::size_t> root_to_id(g.num_nodes(), g.num_nodes());
  std::vector<std::size_t> labels(g.num_nodes());
  std::size_t next = 0;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    const auto root = uf.find(v);
    if (root_to_id[root] == g.num_nodes()) root_to_id[root] = next++;
    labels[v] = root_to_id[root];
  }
  return labels;
}

std::vector<NodeId> two_hop_neighbors(const Graph& g, NodeId u) {
  std::vector<NodeId> out;
  for (NodeId a : g.neighbors(u)) {
    out.push_back(a);
    for (NodeId b : g.neighbors(a)) {
      if (b != u) out.push_back(b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int> bfs_distances(const Graph& g, NodeId source, int max_depth) {
  std::vector<int> dist(g.num_nodes(), -1);
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    if (max_depth >= 0 && dist[v] >= max_depth) continue;
    for (NodeId w : g.neighbors(v)) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
  return dist;
}

}  // namespace grabnel
