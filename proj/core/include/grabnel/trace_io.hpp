#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "grabnel/attack.hpp"

namespace grabnel {

/// Everything persisted about one attacked graph.
struct TraceDocument {
  std::size_t graph_index = 0;
  Graph original;
  AttackResult result;

  bool operator==(const TraceDocument& other) const;
};

bool same_result(const AttackResult& a, const AttackResult& b);

/// Deterministic JSON (fixed key order, shortest round-trip doubles, non-finite losses as null).
std::string trace_to_json(const TraceDocument& doc);
TraceDocument trace_from_json(const std::string& text);

void save_trace(const TraceDocument& doc, const std::filesystem::path& path);
TraceDocument load_trace(const std::filesystem::path& path);

/// Every *.json trace in `dir`, ordered by graph index.
std::vector<TraceDocument> load_trace_dir(const std::filesystem::path& dir);

}  // namespace grabnel
