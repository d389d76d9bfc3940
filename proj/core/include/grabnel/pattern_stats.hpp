#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "grabnel/graph.hpp"
#include "grabnel/perturbation.hpp"
#include "grabnel/trace_io.hpp"

namespace grabnel {

struct Reweight {
  Edge edge;
  double before = 0.0;
  double after = 0.0;
  bool operator==(const Reweight&) const = default;
};

/// Edge-level difference between a clean graph and its adversarial version.
/// `added` and `deleted` are sorted and disjoint; edges touching injected nodes count as added.
struct EditAnnotations {
  std::vector<Edge> added;
  std::vector<double> added_weights;
  std::vector<Edge> deleted;
  std::vector<Reweight> reweighted;
  std::vector<NodeId> injected;
  std::vector<NodeAttribute> injected_attributes;
  bool operator==(const EditAnnotations&) const = default;
};

/// Throws InvalidGraph if `adversarial` has fewer nodes than `original` or disagrees on shared node data.
EditAnnotations annotate(const Graph& original, const Graph& adversarial);
Graph apply_annotations(const Graph& original, const EditAnnotations& ann);

std::string annotations_to_json(const EditAnnotations& ann);

/// Writes graph_<idx>.adversarial.json and graph_<idx>.edits.json. Throws InvalidConfig on a failed trace.
void export_adversarial_graph(const TraceDocument& doc, const std::filesystem::path& dir);

struct PatternReport {
  std::size_t successful = 0;
  /// Successful attacks that changed at least two edges.
  std::size_t multi_edit = 0;
  /// Multi-edit attacks in which every pair of changed edges shares an endpoint
  /// or has endpoints within distance 2 in the clean graph.
  std::size_t clustered = 0;
  /// Multi-edit attacks in which every pair of changed edges shares an endpoint.
  std::size_t endpoint_sharing = 0;
  double clustered_fraction = 0.0;
  double endpoint_sharing_fraction = 0.0;
  /// Histograms indexed by degree in the clean graph. Endpoints that are injected nodes are skipped.
  std::vector<std::size_t> endpoint_degree_histogram;
  std::vector<std::size_t> base_degree_histogram;
  double mean_endpoint_degree = 0.0;
  double mean_base_degree = 0.0;
  std::size_t added = 0;
  std::size_t deleted = 0;
  std::size_t reweighted = 0;
  /// added / deleted; infinite when nothing was deleted.
  double add_delete_ratio = 0.0;
};

/// Aggregates over the successful traces. Throws EmptyInput when none succeeded.
PatternReport adversarial_pattern_stats(std::span<const TraceDocument> traces);

std::string pattern_report_to_json(const PatternReport& r);

}  // namespace grabnel
