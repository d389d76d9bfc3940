#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "grabnel/dataset.hpp"
#include "grabnel/graph.hpp"
#include "grabnel/perturbation.hpp"

namespace grabnel {

/// Canonical graph JSON:
///   {"num_nodes": int, "edges": [[int,int],...], "edge_weights": [float,...]?,
///    "node_labels": [int,...]  XOR  "node_features": [[float,...],...]}
/// Edges are emitted in canonical sorted order; weights only for weighted graphs.
std::string graph_to_json(const Graph& g);

/// Throws DecodeError naming the offending JSON path.
Graph json_to_graph(std::string_view text);

std::string perturbation_to_json(const Perturbation& p);
Perturbation json_to_perturbation(std::string_view text);

/// Dataset file: {"num_classes", "graphs": [...], "labels": [...],
/// "split": {"train": [...], "validation": [...], "test": [...]}}.
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

}  // namespace grabnel
