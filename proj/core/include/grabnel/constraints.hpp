#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "grabnel/graph.hpp"
#include "grabnel/perturbation.hpp"

namespace grabnel {

enum class ConstraintMode {
  None,
  /// Edge additions only between nodes within two hops of each other.
  TwoHop,
  /// Only Rewire{u,v,s} with s within two hops of u.
  TwoHopRewire,
  /// Connected-component count must not change.
  PreserveComponents,
};

struct ConstraintSet {
  ConstraintMode mode = ConstraintMode::None;
  /// Maximum injected nodes as a fraction of the original node count.
  double max_injected_fraction = 0.05;
  /// Maximum connections of one injected node; 0 means "average degree of the graph".
  std::size_t max_edges_per_injected = 0;
};

/// Connection cap for an injected node on `g` under `c` (at least 1).
std::size_t injection_edge_cap(const Graph& g, const ConstraintSet& c);

/// Whether `p` (assumed valid for `g`) is admissible under `c`.
bool check_constraint(const Graph& g, const Perturbation& p, const ConstraintSet& c);

/// Applies `edits` in order, requiring each to be valid and admissible on the
/// intermediate graph and all to be distinct.
bool check_edit_set(const Graph& g, std::span<const Perturbation> edits, const ConstraintSet& c);

std::string to_string(ConstraintMode mode);
ConstraintMode parse_constraint_mode(const std::string& text);

}  // namespace grabnel
