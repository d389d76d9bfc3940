#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "grabnel/graph.hpp"

namespace grabnel {

/// Toggle presence of edge {u, v}.
struct Flip {
  NodeId u = 0;
  NodeId v = 0;
  auto operator<=>(const Flip&) const = default;
};

/// Remove edge (u, v) and add edge (u, s).
struct Rewire {
  NodeId u = 0;
  NodeId v = 0;
  NodeId s = 0;
  auto operator<=>(const Rewire&) const = default;
};

/// Exchange w(u, v) and w(u, s); an absent edge has weight 0.
struct Swap {
  NodeId u = 0;
  NodeId v = 0;
  NodeId s = 0;
  auto operator<=>(const Swap&) const = default;
};

/// Label (discrete graphs) or feature vector (continuous graphs) of an injected node.
using NodeAttribute = std::variant<std::int64_t, std::vector<double>>;

/// Append one node with index num_nodes() and connect it to `connections`.
struct Inject {
  NodeAttribute attribute;
  std::vector<NodeId> connections;
  auto operator<=>(const Inject&) const = default;
};

using Perturbation = std::variant<Flip, Rewire, Swap, Inject>;

/// Several perturbations applied in order; a single-edit candidate has size 1.
using EditSet = std::vector<Perturbation>;

enum class AttackMode { Flip, Rewire, Swap, Inject };

/// Flips with u < v and sorted injection connections, so equal edits compare equal.
Perturbation canonical(Perturbation p);
EditSet canonical(EditSet edits);

inline Flip make_flip(NodeId a, NodeId b) { return a < b ? Flip{a, b} : Flip{b, a}; }

/// Whether `p` satisfies its structural preconditions on `g` (distinct, in-range
/// nodes; Rewire needs (u,v) present and (u,s) absent; Swap needs (u,v) present;
/// injected attributes match the graph's node data type).
bool is_valid(const Graph& g, const Perturbation& p);

/// Returns the perturbed graph. Throws InvalidPerturbation if `p` is not valid for `g`.
Graph apply_perturbation(const Graph& g, const Perturbation& p);

/// Applies the edits in order.
Graph apply_edits(const Graph& g, std::span<const Perturbation> edits);

/// Net number of edits in a sequence; a Flip that undoes an earlier Flip of the
/// same pair cancels it. Other perturbation kinds count one each.
std::size_t edit_distance_from_base(std::span<const Perturbation> trace);

std::string to_string(const Perturbation& p);
std::string to_string(AttackMode mode);
AttackMode parse_attack_mode(const std::string& text);

}  // namespace grabnel
