#include "grabnel/perturbation.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "grabnel/errors.hpp"

namespace grabnel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool in_range(const Graph& g, NodeId v) {
  return v >= 0 && static_cast<std::size_t>(v) < g.num_nodes();
}

bool distinct_in_range(const Graph& g, NodeId a, NodeId b, NodeId c) {
  return in_range(g, a) && in_range(g, b) && in_range(g, c) && a != b && a != c && b != c;
}

struct EdgeList {
  std::vector<Edge> edges;
  std::vector<double> weights;
};

EdgeList copy_edges(const Graph& g) {
  return {{g.edges().begin(), g.edges().end()}, {g.weights().begin(), g.weights().end()}};
}

void erase_edge(EdgeList& list, Edge e) {
  auto it = std::lower_bound(list.edges.begin(), list.edges.end(), e);
  const auto idx = it - list.edges.begin();
  list.edges.erase(it);
  list.weights.erase(list.weights.begin() + idx);
}

void set_weight(EdgeList& list, Edge e, double w) {
  auto it = std::lower_bound(list.edges.begin(), list.edges.end(), e);
  const auto idx = it - list.edges.begin();
  if (it != list.edges.end() && *it == e) {
    if (w == 0.0) {
      list.edges.erase(it);
      list.weights.erase(list.weights.begin() + idx);
    } else {
      list.weights[idx] = w;
    }
  } else if (w != 0.0) {
    list.edges.insert(it, e);
    list.weights.insert(list.weights.begin() + idx, w);
  }
}

}  // namespace

Perturbation canonical(Perturbation p) {
  if (auto* f = std::get_if<Flip>(&p)) {
    *f = make_flip(f->u, f->v);
  } else if (auto* inj = std::get_if<Inject>(&p)) {
    std::sort(inj->connections.begin(), inj->connections.end());
  }
  return p;
}

EditSet canonical(EditSet edits) {
  for (auto& p : edits) p = canonical(std::move(p));
  return edits;
}

bool is_valid(const Graph& g, const Perturbation& p) {
  return std::visit(
      overloaded{
          [&](const Flip& f) { return in_range(g, f.u) && in_range(g, f.v) && f.u != f.v; },
          [&](const Rewire& r) {
            return distinct_in_range(g, r.u, r.v, r.s) && g.has_edge(r.u, r.v) &&
                   !g.has_edge(r.u, r.s);
          },
          [&](const Swap& s) { return distinct_in_range(g, s.u, s.v, s.s) && g.has_edge(s.u, s.v); },
          [&](const Inject& inj) {
            if (g.has_discrete_labels() != std::holds_alternative<std::int64_t>(inj.attribute)) {
              return false;
            }
            if (!g.has_discrete_labels() &&
                std::get<std::vector<double>>(inj.attribute).size() != g.features().dim) {
              return false;
            }
            auto sorted = inj.connections;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
            return std::all_of(sorted.begin(), sorted.end(),
                               [&](NodeId v) { return in_range(g, v); });
          }},
      p);
}

Graph apply_perturbation(const Graph& g, const Perturbation& p) {
  if (!is_valid(g, p)) {
    throw InvalidPerturbation("perturbation " + to_string(p) + " is not valid for this graph");
  }
  return std::visit(
      overloaded{
          [&](const Flip& f) {
            auto list = copy_edges(g);
            const Edge e = make_edge(f.u, f.v);
            if (g.has_edge(f.u, f.v)) {
              erase_edge(list, e);
            } else {
              set_weight(list, e, 1.0);
            }
            return g.with_edges(std::move(list.edges), std::move(list.weights));
          },
          [&](const Rewire& r) {
            auto list = copy_edges(g);
            const double w = g.weight(r.u, r.v);
            erase_edge(list, make_edge(r.u, r.v));
            set_weight(list, make_edge(r.u, r.s), w);
            return g.with_edges(std::move(list.edges), std::move(list.weights));
          },
          [&](const Swap& s) {
            auto list = copy_edges(g);
            const double w_uv = g.weight(s.u, s.v);
            const double w_us = g.weight(s.u, s.s);
            set_weight(list, make_edge(s.u, s.v), w_us);
            set_weight(list, make_edge(s.u, s.s), w_uv);
            return g.with_edges(std::move(list.edges), std::move(list.weights));
          },
          [&](const Inject& inj) {
            const auto new_node = static_cast<NodeId>(g.num_nodes());
            auto list = copy_edges(g);
            for (NodeId v : inj.connections) {
              list.edges.push_back(make_edge(v, new_node));
              list.weights.push_back(1.0);
            }
            NodeData data = g.node_data();
            if (auto* labels = std::get_if<DiscreteLabels>(&data)) {
              labels->push_back(std::get<std::int64_t>(inj.attribute));
            } else {
              auto& features = std::get<ContinuousFeatures>(data);
              const auto& row = std::get<std::vector<double>>(inj.attribute);
              features.values.insert(features.values.end(), row.begin(), row.end());
            }
            if (g.is_weighted()) {
              return Graph::weighted(g.num_nodes() + 1, std::move(list.edges),
                                     std::move(list.weights), std::move(data));
            }
            return Graph(g.num_nodes() + 1, std::move(list.edges), std::move(data));
          }},
      p);
}

Graph apply_edits(const Graph& g, std::span<const Perturbation> edits) {
  Graph current = g;
  for (const auto& p : edits) current = apply_perturbation(current, p);
  return current;
}

std::size_t edit_distance_from_base(std::span<const Perturbation> trace) {
  std::map<Flip, bool> flipped;
  std::size_t others = 0;
  for (const auto& p : trace) {
    if (const auto* f = std::get_if<Flip>(&p)) {
      auto& state = flipped[make_flip(f->u, f->v)];
      state = !state;
    } else {
      ++others;
    }
  }
  return others + static_cast<std::size_t>(
                      std::count_if(flipped.begin(), flipped.end(),
                                    [](const auto& kv) { return kv.second; }));
}

std::string to_string(const Perturbation& p) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const Flip& f) { os << "Flip{" << f.u << "," << f.v << "}"; },
                 [&](const Rewire& r) { os << "Rewire{" << r.u << "," << r.v << "," << r.s << "}"; },
                 [&](const Swap& s) { os << "Swap{" << s.u << "," << s.v << "," << s.s << "}"; },
                 [&](const Inject& inj) {
                   os << "Inject{";
                   for (std::size_t i = 0; i < inj.connections.size(); ++i) {
                     os << (i ? "," : "") << inj.connections[i];
                   }
                   os << "}";
                 }},
             p);
  return os.str();
}

std::string to_string(AttackMode mode) {
  switch (mode) {
    case AttackMode::Flip: return "flip";
    case AttackMode::Rewire: return "rewire";
    case AttackMode::Swap: return "swap";
    case AttackMode::Inject: return "inject";
  }
  return "flip";
}

AttackMode parse_attack_mode(const std::string& text) {
  if (text == "flip") return AttackMode::Flip;
  if (text == "rewire") return AttackMode::Rewire;
  if (text == "swap") return AttackMode::Swap;
  if (text == "inject") return AttackMode::Inject;
  throw InvalidConfig("unknown attack mode '" + text + "'");
}

}  // namespace grabnel
