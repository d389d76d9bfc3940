#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "grabnel/graph.hpp"

namespace grabnel {

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1), sets_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  /// Returns true if a and b were in different sets.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    --sets_;
    return true;
  }

  bool connected(std::size_t a, std::size_t b) { return find(a) == find(b); }
  std::size_t set_count() const { return sets_; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
  std::size_t sets_;
};

/// Number of connected components, isolated nodes included.
std::size_t connected_components(const Graph& g);

/// Component id of every node (ids are dense, ordered by smallest member).
std::vector<std::size_t> component_labels(const Graph& g);

/// Nodes at shortest-path distance 1 or 2 from u, sorted, excluding u.
std::vector<NodeId> two_hop_neighbors(const Graph& g, NodeId u);

/// Hop distance from `source` to every node; -1 when unreachable.
std::vector<int> bfs_distances(const Graph& g, NodeId source, int max_depth = -1);

}  // namespace grabnel
