#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "grabnel/constraints.hpp"
#include "grabnel/graph.hpp"
#include "grabnel/perturbation.hpp"

namespace grabnel {

using Rng = std::mt19937_64;

/// How the attribute of an injected node is chosen.
struct InjectionSettings {
  enum class Init { Zero, CopyRandom, Constant };
  Init init = Init::CopyRandom;
  /// Used by Init::Constant: every feature (or the label, rounded) takes this value.
  double constant = 0.0;
};

/// Samples and mutates admissible edits of one attack mode under a constraint set.
class CandidateGenerator {
 public:
  CandidateGenerator(AttackMode mode, ConstraintSet constraints, InjectionSettings injection = {});

  AttackMode mode() const { return mode_; }
  const ConstraintSet& constraints() const { return constraints_; }

  bool admissible(const Graph& g, const Perturbation& p) const;
  bool admissible(const Graph& g, const EditSet& edits) const;

  /// Uniformly random admissible single edit, or nullopt when none exists.
  std::optional<Perturbation> random_edit(const Graph& g, Rng& rng) const;

  /// `size` distinct edits, admissible when applied in order; nullopt if sampling fails.
  std::optional<EditSet> random_edit_set(const Graph& g, std::size_t size, Rng& rng) const;

  /// Every admissible single edit of g. Injection edits are not enumerable and throw.
  std::vector<Perturbation> enumerate(const Graph& g) const;

  /// Child sharing one end node with the parent: a Flip keeps u or v and
  /// re-draws the other end; Rewire/Swap re-draw s; Inject re-draws one connection.
  /// Throws MutationExhausted when no admissible child turns up within the attempt bound.
  Perturbation mutate(const Perturbation& parent, const Graph& g, Rng& rng) const;

  /// Mutates one randomly chosen member of the set.
  EditSet mutate(const EditSet& parent, const Graph& g, Rng& rng) const;

  static constexpr int kMutationAttempts = 64;
  static constexpr int kSampleAttempts = 256;

 private:
  std::optional<Perturbation> draw(const Graph& g, Rng& rng) const;
  NodeAttribute injected_attribute(const Graph& g, Rng& rng) const;

  AttackMode mode_;
  ConstraintSet constraints_;
  InjectionSettings injection_;
};

}  // namespace grabnel
