#include "grabnel/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "grabnel/errors.hpp"

namespace grabnel {

namespace {

void validate_node_data(std::size_t num_nodes, const NodeData& data) {
  if (const auto* labels = std::get_if<DiscreteLabels>(&data)) {
    if (labels->size() != num_nodes) {
      throw InvalidGraph("node label count " + std::to_string(labels->size()) +
                         " != num_nodes " + std::to_string(num_nodes));
    }
    return;
  }
  const auto& features = std::get<ContinuousFeatures>(data);
  if (features.values.size() != num_nodes * features.dim) {
    throw InvalidGraph("node feature matrix is not num_nodes x dim");
  }
}

}  // namespace

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges, NodeData node_data)
    : num_nodes_(num_nodes), node_data_(std::move(node_data)) {
  validate_node_data(num_nodes_, node_data_);
  std::vector<double> weights(edges.size(), 1.0);
  build(std::move(edges), std::move(weights));
}

Graph Graph::weighted(std::size_t num_nodes, std::vector<Edge> edges, std::vector<double> weights,
                      NodeData node_data) {
  if (weights.size() != edges.size()) {
    throw InvalidGraph("edge weight count does not match edge count");
  }
  Graph g;
  g.num_nodes_ = num_nodes;
  g.weighted_ = true;
  g.node_data_ = std::move(node_data);
  validate_node_data(num_nodes, g.node_data_);
  g.build(std::move(edges), std::move(weights));
  return g;
}

Graph Graph::unlabeled(std::size_t num_nodes, std::vector<Edge> edges) {
  return Graph(num_nodes, std::move(edges), DiscreteLabels(num_nodes, 0));
}

Graph Graph::with_edges(std::vector<Edge> edges, std::vector<double> weights) const {
  Graph g;
  g.num_nodes_ = num_nodes_;
  g.weighted_ = weighted_;
  g.node_data_ = node_data_;
  g.build(std::move(edges), std::move(weights));
  return g;
}

void Graph::build(std::vector<Edge> edges, std::vector<double> weights) {
  const auto n = static_cast<NodeId>(num_nodes_);
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    Edge& e = edges[i];
    if (e.u == e.v) throw InvalidGraph("self-loop on node " + std::to_string(e.u));
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      throw InvalidGraph("edge endpoint out of range: " + std::to_string(e.u) + "," +
                         std::to_string(e.v));
    }
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw InvalidGraph("edge weights must be finite and non-negative");
    }
    e = make_edge(e.u, e.v);
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return edges[a] < edges[b]; });

  edges_.clear();
  weights_.clear();
  edges_.reserve(edges.size());
  weights_.reserve(edges.size());
  for (std::size_t idx : order) {
    if (!edges_.empty() && edges_.back() == edges[idx]) continue;
    edges_.push_back(edges[idx]);
    weights_.push_back(weights[idx]);
  }

  offsets_.assign(num_nodes_ + 1, 0);
  for (const Edge& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  adjacency_.assign(2 * edges_.size(), 0);
  adjacency_weights_.assign(2 * edges_.size(), 0.0);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  // Edges are sorted by (u, v), so each adjacency row comes out sorted.
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    adjacency_[cursor[e.v]] = e.u;
    adjacency_weights_[cursor[e.v]++] = weights_[i];
  }
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    adjacency_[cursor[e.u]] = e.v;
    adjacency_weights_[cursor[e.u]++] = weights_[i];
  }
}

bool Graph::has_edge(NodeId a, NodeId b) const {
  if (a == b || a < 0 || b < 0 || static_cast<std::size_t>(a) >= num_nodes_ ||
      static_cast<std::size_t>(b) >= num_nodes_) {
    return false;
  }
  auto row = neighbors(a);
  return std::binary_search(row.begin(), row.end(), b);
}

double Graph::weight(NodeId a, NodeId b) const {
  if (!has_edge(a, b)) return 0.0;
  auto row = neighbors(a);
  auto it = std::lower_bound(row.begin(), row.end(), b);
  return neighbor_weights(a)[static_cast<std::size_t>(it - row.begin())];
}

bool Graph::operator==(const Graph& other) const {
  return num_nodes_ == other.num_nodes_ && weighted_ == other.weighted_ &&
         edges_ == other.edges_ && weights_ == other.weights_ &&
         node_data_ == other.node_data_;
}

}  // namespace grabnel
