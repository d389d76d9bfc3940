#pragma once

#include <set>
#include <string>

#include "grabnel/attack.hpp"

namespace grabnel::detail {

/// Budget-aware query ledger shared by every attacker.
class Recorder {
 public:
  Recorder(VictimSession& session, const Graph& original, int y, const AttackConfig& cfg, std::string attacker);

  const Budget& budget() const { return result_.trace.budget; }
  std::size_t used() const { return session_.queries() - start_; }
  std::size_t remaining() const { return budget().queries - std::min(budget().queries, used()); }
  bool succeeded() const { return result_.success; }

  /// Queries `perturbed` (= stage base + `edits`), records it and returns the loss.
  /// `prefix` holds the edits committed before this stage; on success the
  /// reported graph is recorded with prefix + edits.
  double query(const Graph& perturbed, std::size_t stage, const EditSet& edits, const EditSet& prefix = {});

  void commit(const EditSet& edits) { result_.trace.committed.push_back(edits); }

  /// Final result; `fallback` is reported as the edit sequence when the attack failed.
  AttackResult finish(const EditSet& fallback);

 private:
  VictimSession& session_;
  const Graph& original_;
  int y_;
  std::optional<int> target_;
  std::size_t start_;
  AttackResult result_;
};

/// A random single edit (or edit set of `size`) of `base` that is not in
/// `queried`; nullopt when none can be found.
std::optional<EditSet> random_unqueried(const CandidateGenerator& gen, const Graph& base, std::size_t size,
                                        const std::set<EditSet>& queried, Rng& rng);

/// Surrogate plus encoder over every graph queried so far.
class SurrogateModel {
 public:
  SurrogateModel(const AttackConfig& cfg, const Graph& original);

  void observe(const Graph& g, double loss);
  std::size_t rows() const { return losses_.size(); }

  /// EI-maximising candidates around `base` from the genetic optimiser.
  std::vector<EditSet> propose(const Graph& base, std::span<const ScoredEdits> history,
                               const CandidateGenerator& gen, std::size_t edit_set_size,
                               const std::set<EditSet>& queried, Rng& rng);

 private:
  const AttackConfig& cfg_;
  WLEncoder encoder_;
  std::vector<double> losses_;
};

}  // namespace grabnel::detail
