#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace grabnel {

using NodeId = std::int32_t;

/// Undirected edge, stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  auto operator<=>(const Edge&) const = default;
};

inline Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// One integer label per node.
using DiscreteLabels = std::vector<std::int64_t>;

/// One fixed-length real vector per node, stored row-major.
struct ContinuousFeatures {
  std::size_t dim = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t node) const {
    return {values.data() + node * dim, dim};
  }
  bool operator==(const ContinuousFeatures&) const = default;
};

using NodeData = std::variant<DiscreteLabels, ContinuousFeatures>;

/// Immutable undirected simple graph with optional edge weights.
///
/// Edges are kept sorted and canonical (u < v); adjacency is held in CSR form so
/// neighbour scans are contiguous. Unweighted graphs report weight 1 for every
/// edge present and 0 for absent pairs.
class Graph {
 public:
  Graph() = default;

  /// Unweighted graph. Duplicate pairs collapse to one edge.
  Graph(std::size_t num_nodes, std::vector<Edge> edges, NodeData node_data);

  /// Weighted graph; `weights` is aligned with `edges`. Duplicates keep the first weight.
  static Graph weighted(std::size_t num_nodes, std::vector<Edge> edges,
                        std::vector<double> weights, NodeData node_data);

  /// Graph with `num_nodes` nodes, all labelled 0, and the given edges.
  static Graph unlabeled(std::size_t num_nodes, std::vector<Edge> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  bool is_weighted() const { return weighted_; }

  std::span<const Edge> edges() const { return edges_; }
  std::span<const double> weights() const { return weights_; }

  bool has_edge(NodeId a, NodeId b) const;
  /// Weight of {a,b}; 0 when absent.
  double weight(NodeId a, NodeId b) const;

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  /// Weights aligned with neighbors(v).
  std::span<const double> neighbor_weights(NodeId v) const {
    return {adjacency_weights_.data() + offsets_[v],
            adjacency_weights_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

  const NodeData& node_data() const { return node_data_; }
  bool has_discrete_labels() const { return std::holds_alternative<DiscreteLabels>(node_data_); }
  const DiscreteLabels& labels() const { return std::get<DiscreteLabels>(node_data_); }
  const ContinuousFeatures& features() const { return std::get<ContinuousFeatures>(node_data_); }

  double average_degree() const {
    return num_nodes_ == 0 ? 0.0 : 2.0 * static_cast<double>(edges_.size()) / num_nodes_;
  }

  /// Copy of this graph with a different edge list (node data kept).
  Graph with_edges(std::vector<Edge> edges, std::vector<double> weights) const;

  bool operator==(const Graph& other) const;

 private:
  void build(std::vector<Edge> edges, std::vector<double> weights);

  std::size_t num_nodes_ = 0;
  bool weighted_ = false;
  std::vector<Edge> edges_;
  std::vector<double> weights_;
  NodeData node_data_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adjacency_;
  std::vector<double> adjacency_weights_;
};

}  // namespace grabnel
