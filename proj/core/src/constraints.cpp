#include "grabnel/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "grabnel/algorithms.hpp"
#include "grabnel/errors.hpp"

namespace grabnel {

namespace {

bool within_two_hops(const Graph& g, NodeId u, NodeId v) {
  if (g.has_edge(u, v)) return true;
  for (NodeId a : g.neighbors(u)) {
    if (g.has_edge(a, v)) return true;
  }
  return false;
}

bool two_hop_admissible(const Graph& g, const Perturbation& p) {
  if (const auto* f = std::get_if<Flip>(&p)) {
    return g.has_edge(f->u, f->v) || within_two_hops(g, f->u, f->v);
  }
  if (const auto* r = std::get_if<Rewire>(&p)) return within_two_hops(g, r->u, r->s);
  if (const auto* s = std::get_if<Swap>(&p)) {
    return g.has_edge(s->u, s->s) || within_two_hops(g, s->u, s->s);
  }
  return true;
}

}  // namespace

std::size_t injection_edge_cap(const Graph& g, const ConstraintSet& c) {
  if (c.max_edges_per_injected > 0) return c.max_edges_per_injected;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(g.average_degree())));
}

bool check_constraint(const Graph& g, const Perturbation& p, const ConstraintSet& c) {
  if (const auto* inj = std::get_if<Inject>(&p)) {
    if (inj->connections.size() > injection_edge_cap(g, c)) return false;
  }
  switch (c.mode) {
    case ConstraintMode::None:
      return true;
    case ConstraintMode::TwoHop:
      return two_hop_admissible(g, p);
    case ConstraintMode::TwoHopRewire: {
      const auto* r = std::get_if<Rewire>(&p);
      return r != nullptr && within_two_hops(g, r->u, r->s);
    }
    case ConstraintMode::PreserveComponents:
      return connected_components(apply_perturbation(g, p)) == connected_components(g);
  }
  return false;
}

bool check_edit_set(const Graph& g, std::span<const Perturbation> edits, const ConstraintSet& c) {
  std::set<Perturbation> seen;
  Graph current = g;
  for (const auto& p : edits) {
    if (!seen.insert(canonical(p)).second) return false;
    if (!is_valid(current, p) || !check_constraint(current, p, c)) return false;
    if (&p != &edits.back()) current = apply_perturbation(current, p);
  }
  return true;
}

std::string to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::None: return "none";
    case ConstraintMode::TwoHop: return "2hop";
    case ConstraintMode::TwoHopRewire: return "2hop-rewire";
    case ConstraintMode::PreserveComponents: return "preserve-components";
  }
  return "none";
}

ConstraintMode parse_constraint_mode(const std::string& text) {
  if (text == "none") return ConstraintMode::None;
  if (text == "2hop") return ConstraintMode::TwoHop;
  if (text == "2hop-rewire") return ConstraintMode::TwoHopRewire;
  if (text == "preserve-components") return ConstraintMode::PreserveComponents;
  throw InvalidConfig("unknown constraint '" + text + "'");
}

}  // namespace grabnel
