#pragma once

#include <json.hpp>
#include <string>

#include "grabnel/dataset.hpp"
#include "grabnel/graph.hpp"
#include "grabnel/perturbation.hpp"

namespace grabnel::detail {

using ordered_json = nlohmann::ordered_json;

ordered_json graph_to_value(const Graph& g);
Graph value_to_graph(const ordered_json& doc, const std::string& path = "");

ordered_json perturbation_to_value(const Perturbation& p);
Perturbation value_to_perturbation(const ordered_json& doc, const std::string& path = "");

ordered_json edits_to_value(const EditSet& edits);
EditSet value_to_edits(const ordered_json& doc, const std::string& path = "");

ordered_json dataset_to_value(const LabeledDataset& ds);
LabeledDataset value_to_dataset(const ordered_json& doc);

/// Parses text, turning syntax errors into DecodeError.
ordered_json parse_json(std::string_view text);

// Typed accessors that throw DecodeError with the JSON path on mismatch.
const ordered_json& member(const ordered_json& obj, const std::string& key, const std::string& path);
std::int64_t as_int(const ordered_json& v, const std::string& path);
double as_double(const ordered_json& v, const std::string& path);
const ordered_json& as_array(const ordered_json& v, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace grabnel::detail
