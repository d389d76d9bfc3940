#include "grabnel/pattern_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "grabnel/algorithms.hpp"
#include "grabnel/errors.hpp"
#include "json_internal.hpp"

namespace grabnel {

using detail::ordered_json;

namespace {

std::map<Edge, double> weight_map(const Graph& g) {
  std::map<Edge, double> m;
  const auto edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) m[edges[i]] = g.is_weighted() ? g.weights()[i] : 1.0;
  return m;
}

NodeAttribute attribute_of(const Graph& g, NodeId v) {
  if (g.has_discrete_labels()) return g.labels()[static_cast<std::size_t>(v)];
  const auto row = g.features().row(static_cast<std::size_t>(v));
  return std::vector<double>(row.begin(), row.end());
}

ordered_json edge_value(const Edge& e) { return ordered_json::array({e.u, e.v}); }

ordered_json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

std::vector<Edge> changed_edges(const EditAnnotations& a) {
  std::vector<Edge> out = a.added;
  out.insert(out.end(), a.deleted.begin(), a.deleted.end());
  for (const auto& r : a.reweighted) out.push_back(r.edge);
  return out;
}

}  // namespace

EditAnnotations annotate(const Graph& original, const Graph& adversarial) {
  const std::size_t n = original.num_nodes();
  if (adversarial.num_nodes() < n) throw InvalidGraph("adversarial graph has fewer nodes than the original");
  if (original.has_discrete_labels() != adversarial.has_discrete_labels()) {
    throw InvalidGraph("adversarial graph has a different node data kind");
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (attribute_of(original, static_cast<NodeId>(v)) != attribute_of(adversarial, static_cast<NodeId>(v))) {
      throw InvalidGraph("node " + std::to_string(v) + " changed its attribute");
    }
  }
  EditAnnotations ann;
  const auto before = weight_map(original);
  const auto after = weight_map(adversarial);
  for (const auto& [e, w] : after) {
    const auto it = before.find(e);
    if (it == before.end()) {
      ann.added.push_back(e);
      ann.added_weights.push_back(w);
    } else if (it->second != w) {
      ann.reweighted.push_back({e, it->second, w});
    }
  }
  for (const auto& [e, w] : before) {
    if (!after.count(e)) ann.deleted.push_back(e);
  }
  for (std::size_t v = n; v < adversarial.num_nodes(); ++v) {
    ann.injected.push_back(static_cast<NodeId>(v));
    ann.injected_attributes.push_back(attribute_of(adversarial, static_cast<NodeId>(v)));
  }
  return ann;
}

Graph apply_annotations(const Graph& original, const EditAnnotations& ann) {
  auto weights = weight_map(original);
  for (const auto& e : ann.deleted) weights.erase(e);
  for (const auto& r : ann.reweighted) weights[r.edge] = r.after;
  for (std::size_t i = 0; i < ann.added.size(); ++i) weights[ann.added[i]] = ann.added_weights[i];

  NodeData data = original.node_data();
  for (const auto& attr : ann.injected_attributes) {
    if (auto* labels = std::get_if<DiscreteLabels>(&data)) {
      labels->push_back(std::get<std::int64_t>(attr));
    } else {
      const auto& row = std::get<std::vector<double>>(attr);
      auto& f = std::get<ContinuousFeatures>(data);
      f.values.insert(f.values.end(), row.begin(), row.end());
    }
  }
  const std::size_t n = original.num_nodes() + ann.injected.size();
  std::vector<Edge> edges;
  std::vector<double> w;
  for (const auto& [e, x] : weights) {
    edges.push_back(e);
    w.push_back(x);
  }
  if (original.is_weighted()) return Graph::weighted(n, std::move(edges), std::move(w), std::move(data));
  return Graph(n, std::move(edges), std::move(data));
}

std::string annotations_to_json(const EditAnnotations& ann) {
  ordered_json j;
  ordered_json added = ordered_json::array();
  for (std::size_t i = 0; i < ann.added.size(); ++i) {
    added.push_back({{"edge", edge_value(ann.added[i])}, {"weight", ann.added_weights[i]}});
  }
  j["added"] = std::move(added);
  ordered_json deleted = ordered_json::array();
  for (const auto& e : ann.deleted) deleted.push_back(edge_value(e));
  j["deleted"] = std::move(deleted);
  ordered_json reweighted = ordered_json::array();
  for (const auto& r : ann.reweighted) {
    reweighted.push_back({{"edge", edge_value(r.edge)}, {"before", r.before}, {"after", r.after}});
  }
  j["reweighted"] = std::move(reweighted);
  ordered_json injected = ordered_json::array();
  for (std::size_t i = 0; i < ann.injected.size(); ++i) {
    ordered_json node;
    node["node"] = ann.injected[i];
    std::visit([&](const auto& a) { node["attribute"] = a; }, ann.injected_attributes[i]);
    injected.push_back(std::move(node));
  }
  j["injected"] = std::move(injected);
  return j.dump(1) + "\n";
}

void export_adversarial_graph(const TraceDocument& doc, const std::filesystem::path& dir) {
  if (!doc.result.success || !doc.result.adversarial) {
    throw InvalidConfig("graph " + std::to_string(doc.graph_index) + " was not successfully attacked");
  }
  std::filesystem::create_directories(dir);
  const std::string stem = "graph_" + std::to_string(doc.graph_index);
  detail::write_file((dir / (stem + ".adversarial.json")).string(), detail::graph_to_value(*doc.result.adversarial).dump(1) + "\n");
  detail::write_file((dir / (stem + ".edits.json")).string(),
                     annotations_to_json(annotate(doc.original, *doc.result.adversarial)));
}

PatternReport adversarial_pattern_stats(std::span<const TraceDocument> traces) {
  PatternReport r;
  std::size_t endpoint_degree_sum = 0, endpoint_count = 0, base_degree_sum = 0, base_count = 0;
  auto bump = [](std::vector<std::size_t>& h, std::size_t d) {
    if (h.size() <= d) h.resize(d + 1, 0);
    ++h[d];
  };
  for (const auto& doc : traces) {
    if (!doc.result.success || !doc.result.adversarial) continue;
    ++r.successful;
    const Graph& g = doc.original;
    const auto n = static_cast<NodeId>(g.num_nodes());
    const EditAnnotations ann = annotate(g, *doc.result.adversarial);
    r.added += ann.added.size();
    r.deleted += ann.deleted.size();
    r.reweighted += ann.reweighted.size();

    for (NodeId v = 0; v < n; ++v) {
      bump(r.base_degree_histogram, g.degree(v));
      base_degree_sum += g.degree(v);
      ++base_count;
    }
    const auto changed = changed_edges(ann);
    for (const auto& e : changed) {
      for (NodeId v : {e.u, e.v}) {
        if (v >= n) continue;
        bump(r.endpoint_degree_histogram, g.degree(v));
        endpoint_degree_sum += g.degree(v);
        ++endpoint_count;
      }
    }
    if (changed.size() < 2) continue;
    ++r.multi_edit;

    std::map<NodeId, std::vector<int>> dist;
    for (const auto& e : changed) {
      for (NodeId v : {e.u, e.v}) {
        if (v < n && !dist.count(v)) dist[v] = bfs_distances(g, v, 2);
      }
    }
    bool all_share = true, all_close = true;
    for (std::size_t i = 0; i < changed.size(); ++i) {
      for (std::size_t k = i + 1; k < changed.size(); ++k) {
        const Edge& a = changed[i];
        const Edge& b = changed[k];
        const bool share = a.u == b.u || a.u == b.v || a.v == b.u || a.v == b.v;
        bool close = share;
        for (NodeId x : {a.u, a.v}) {
          for (NodeId y : {b.u, b.v}) {
            if (x < n && y < n && dist[x][static_cast<std::size_t>(y)] >= 0) close = true;
          }
        }
        all_share = all_share && share;
        all_close = all_close && close;
      }
    }
    if (all_share) ++r.endpoint_sharing;
    if (all_close) ++r.clustered;
  }
  if (r.successful == 0) throw EmptyInput("no successful attacks among the traces");
  if (r.multi_edit > 0) {
    r.clustered_fraction = static_cast<double>(r.clustered) / static_cast<double>(r.multi_edit);
    r.endpoint_sharing_fraction = static_cast<double>(r.endpoint_sharing) / static_cast<double>(r.multi_edit);
  }
  if (endpoint_count > 0) r.mean_endpoint_degree = static_cast<double>(endpoint_degree_sum) / static_cast<double>(endpoint_count);
  if (base_count > 0) r.mean_base_degree = static_cast<double>(base_degree_sum) / static_cast<double>(base_count);
  if (r.deleted > 0) {
    r.add_delete_ratio = static_cast<double>(r.added) / static_cast<double>(r.deleted);
  } else {
    r.add_delete_ratio = r.added > 0 ? HUGE_VAL : 0.0;
  }
  return r;
}

std::string pattern_report_to_json(const PatternReport& r) {
  ordered_json j;
  j["successful"] = r.successful;
  j["multi_edit"] = r.multi_edit;
  j["clustered"] = r.clustered;
  j["endpoint_sharing"] = r.endpoint_sharing;
  j["clustered_fraction"] = r.clustered_fraction;
  j["endpoint_sharing_fraction"] = r.endpoint_sharing_fraction;
  j["endpoint_degree_histogram"] = r.endpoint_degree_histogram;
  j["base_degree_histogram"] = r.base_degree_histogram;
  j["mean_endpoint_degree"] = r.mean_endpoint_degree;
  j["mean_base_degree"] = r.mean_base_degree;
  j["added"] = r.added;
  j["deleted"] = r.deleted;
  j["reweighted"] = r.reweighted;
  j["add_delete_ratio"] = finite_or_null(r.add_delete_ratio);
  return j.dump(2) + "\n";
}

}  // namespace grabnel
