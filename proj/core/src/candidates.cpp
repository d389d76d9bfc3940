#include "grabnel/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "grabnel/errors.hpp"

namespace grabnel {

namespace {

NodeId uniform_node(std::size_t n, Rng& rng) {
  return static_cast<NodeId>(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
}

/// Uniform node outside `excluded`; requires n > excluded.size() distinct values.
NodeId uniform_node_except(std::size_t n, std::initializer_list<NodeId> excluded, Rng& rng) {
  while (true) {
    const NodeId w = uniform_node(n, rng);
    if (std::find(excluded.begin(), excluded.end(), w) == excluded.end()) return w;
  }
}

}  // namespace

CandidateGenerator::CandidateGenerator(AttackMode mode, ConstraintSet constraints,
                                       InjectionSettings injection)
    : mode_(mode), constraints_(constraints), injection_(injection) {}

bool CandidateGenerator::admissible(const Graph& g, const Perturbation& p) const {
  return is_valid(g, p) && check_constraint(g, p, constraints_);
}

bool CandidateGenerator::admissible(const Graph& g, const EditSet& edits) const {
  return check_edit_set(g, edits, constraints_);
}

NodeAttribute CandidateGenerator::injected_attribute(const Graph& g, Rng& rng) const {
  if (g.has_discrete_labels()) {
    switch (injection_.init) {
      case InjectionSettings::Init::Zero: return std::int64_t{0};
      case InjectionSettings::Init::Constant: return static_cast<std::int64_t>(std::lround(injection_.constant));
      case InjectionSettings::Init::CopyRandom:
        return g.num_nodes() ? g.labels()[static_cast<std::size_t>(uniform_node(g.num_nodes(), rng))]
                             : std::int64_t{0};
    }
  }
  const auto& f = g.features();
  switch (injection_.init) {
    case InjectionSettings::Init::Zero: return std::vector<double>(f.dim, 0.0);
    case InjectionSettings::Init::Constant: return std::vector<double>(f.dim, injection_.constant);
    case InjectionSettings::Init::CopyRandom: {
      if (g.num_nodes() == 0) return std::vector<double>(f.dim, 0.0);
      auto row = f.row(static_cast<std::size_t>(uniform_node(g.num_nodes(), rng)));
      return std::vector<double>(row.begin(), row.end());
    }
  }
  return std::vector<double>(f.dim, 0.0);
}

std::optional<Perturbation> CandidateGenerator::draw(const Graph& g, Rng& rng) const {
  const std::size_t n = g.num_nodes();
  switch (mode_) {
    case AttackMode::Flip: {
      if (n < 2) return std::nullopt;
      const NodeId u = uniform_node(n, rng);
      return make_flip(u, uniform_node_except(n, {u}, rng));
    }
    case AttackMode::Rewire:
    case AttackMode::Swap: {
      if (g.num_edges() == 0 || n < 3) return std::nullopt;
      const Edge e = g.edges()[std::uniform_int_distribution<std::size_t>(0, g.num_edges() - 1)(rng)];
      const bool flip_orientation = std::bernoulli_distribution(0.5)(rng);
      const NodeId u = flip_orientation ? e.v : e.u;
      const NodeId v = flip_orientation ? e.u : e.v;
      const NodeId s = uniform_node_except(n, {u, v}, rng);
      if (mode_ == AttackMode::Rewire) return Rewire{u, v, s};
      return Swap{u, v, s};
    }
    case AttackMode::Inject: {
      if (n == 0) return std::nullopt;
      const std::size_t cap = std::min(injection_edge_cap(g, constraints_), n);
      const std::size_t k = std::uniform_int_distribution<std::size_t>(1, cap)(rng);
      std::vector<NodeId> nodes(n);
      for (std::size_t i = 0; i < n; ++i) nodes[i] = static_cast<NodeId>(i);
      for (std::size_t i = 0; i < k; ++i) {
        std::swap(nodes[i], nodes[std::uniform_int_distribution<std::size_t>(i, n - 1)(rng)]);
      }
      nodes.resize(k);
      std::sort(nodes.begin(), nodes.end());
      return Inject{injected_attribute(g, rng), std::move(nodes)};
    }
  }
  return std::nullopt;
}

std::optional<Perturbation> CandidateGenerator::random_edit(const Graph& g, Rng& rng) const {
  for (int attempt = 0; attempt < kSampleAttempts; ++attempt) {
    auto p = draw(g, rng);
    if (!p) return std::nullopt;
    if (admissible(g, *p)) return canonical(std::move(*p));
  }
  if (mode_ == AttackMode::Inject) return std::nullopt;
  auto all = enumerate(g);
  if (all.empty()) return std::nullopt;
  return all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng)];
}

std::optional<EditSet> CandidateGenerator::random_edit_set(const Graph& g, std::size_t size,
                                                           Rng& rng) const {
  for (int attempt = 0; attempt < kSampleAttempts / 8 + 1; ++attempt) {
    EditSet edits;
    std::set<Perturbation> seen;
    Graph current = g;
    bool failed = false;
    while (edits.size() < size && !failed) {
      bool placed = false;
      for (int tries = 0; tries < kSampleAttempts && !placed; ++tries) {
        auto p = random_edit(current, rng);
        if (!p) break;
        if (!seen.insert(*p).second) continue;
        current = apply_perturbation(current, *p);
        edits.push_back(std::move(*p));
        placed = true;
      }
      failed = !placed;
    }
    if (!failed) return edits;
  }
  return std::nullopt;
}

std::vector<Perturbation> CandidateGenerator::enumerate(const Graph& g) const {
  std::vector<Perturbation> out;
  const auto n = static_cast<NodeId>(g.num_nodes());
  switch (mode_) {
    case AttackMode::Flip:
      for (NodeId u = 0; u < n; ++u) {
        for (NodeId v = u + 1; v < n; ++v) {
          Perturbation p = Flip{u, v};
          if (admissible(g, p)) out.push_back(std::move(p));
        }
      }
      break;
    case AttackMode::Rewire:
    case AttackMode::Swap:
      for (const Edge& e : g.edges()) {
        for (auto [u, v] : {std::pair{e.u, e.v}, std::pair{e.v, e.u}}) {
          for (NodeId s = 0; s < n; ++s) {
            Perturbation p = mode_ == AttackMode::Rewire ? Perturbation(Rewire{u, v, s})
                                                         : Perturbation(Swap{u, v, s});
            if (admissible(g, p)) out.push_back(std::move(p));
          }
        }
      }
      std::sort(out.begin(), out.end());
      break;
    case AttackMode::Inject:
      throw InvalidConfig("injection edits cannot be enumerated");
  }
  return out;
}

Perturbation CandidateGenerator::mutate(const Perturbation& parent, const Graph& g, Rng& rng) const {
  const std::size_t n = g.num_nodes();
  for (int attempt = 0; attempt < kMutationAttempts; ++attempt) {
    Perturbation child = parent;
    if (auto* f = std::get_if<Flip>(&child)) {
      if (n < 3) break;
      const NodeId keep = std::bernoulli_distribution(0.5)(rng) ? f->u : f->v;
      child = make_flip(keep, uniform_node_except(n, {f->u, f->v}, rng));
    } else if (auto* r = std::get_if<Rewire>(&child)) {
      if (n < 4) break;
      r->s = uniform_node_except(n, {r->u, r->v, r->s}, rng);
    } else if (auto* s = std::get_if<Swap>(&child)) {
      if (n < 4) break;
      s->s = uniform_node_except(n, {s->u, s->v, s->s}, rng);
    } else {
      auto& inj = std::get<Inject>(child);
      if (inj.connections.empty() || n <= inj.connections.size()) break;
      const auto slot = std::uniform_int_distribution<std::size_t>(0, inj.connections.size() - 1)(rng);
      NodeId w;
      do {
        w = uniform_node(n, rng);
      } while (std::find(inj.connections.begin(), inj.connections.end(), w) != inj.connections.end());
      inj.connections[slot] = w;
      std::sort(inj.connections.begin(), inj.connections.end());
    }
    if (admissible(g, child)) return child;
  }
  throw MutationExhausted("no admissible mutation of " + to_string(parent));
}

EditSet CandidateGenerator::mutate(const EditSet& parent, const Graph& g, Rng& rng) const {
  if (parent.empty()) throw MutationExhausted("cannot mutate an empty edit set");
  for (int attempt = 0; attempt < kMutationAttempts; ++attempt) {
    EditSet child = parent;
    const auto slot = std::uniform_int_distribution<std::size_t>(0, parent.size() - 1)(rng);
    // Members are mutated against the graph they apply to.
    Graph before = apply_edits(g, std::span<const Perturbation>(parent.data(), slot));
    try {
      child[slot] = mutate(parent[slot], before, rng);
    } catch (const MutationExhausted&) {
      continue;
    }
    if (admissible(g, child)) return child;
  }
  throw MutationExhausted("no admissible mutation of an edit set of size " +
                          std::to_string(parent.size()));
}

}  // namespace grabnel
