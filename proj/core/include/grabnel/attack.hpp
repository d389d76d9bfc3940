#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grabnel/acquisition.hpp"
#include "grabnel/candidates.hpp"
#include "grabnel/constraints.hpp"
#include "grabnel/surrogate.hpp"
#include "grabnel/victim.hpp"

namespace grabnel {

struct AttackConfig {
  AttackMode mode = AttackMode::Flip;
  ConstraintSet constraints;
  double budget_ratio = 0.03;
  std::size_t query_multiplier = 40;
  std::size_t query_cap = 20000;
  /// Random queries opening every stage (truncated to the stage budget).
  std::size_t n_init = 50;
  std::optional<int> target;
  std::uint64_t seed = 0;
  /// Replace the derived edit budget / query budget when set (the cap still applies).
  std::optional<std::size_t> max_edits;
  std::optional<std::size_t> max_queries;
  int wl_iterations = 1;
  AcquisitionConfig acquisition;
  SurrogateConfig surrogate;
  InjectionSettings injection;
  /// Genetic baseline: population size and truncation-selection pool.
  std::size_t genetic_population = 20;
  std::size_t genetic_parents = 5;

  /// Throws InvalidConfig when a field is out of range.
  void validate() const;
};

struct Budget {
  /// Δ: edits (or injected nodes) allowed.
  std::size_t edits = 0;
  /// B: victim queries allowed, already capped.
  std::size_t queries = 0;
};

/// Δ = max(1, ⌊r·n²⌋) for structural modes and max(1, ⌊0.05·n⌋) injected nodes
/// for injection; B = min(multiplier·Δ, cap). Overrides in cfg win.
/// Throws InvalidConfig if B < Δ.
Budget compute_budget(const Graph& g, const AttackConfig& cfg);

/// ⌊B/Δ⌋ queries per stage with the remainder on the last stage.
std::vector<std::size_t> stage_budgets(const Budget& budget);

/// Untargeted: max over t != y of log f_t − log f_y. Targeted: log f_t − log f_y.
/// Scores are floored at 1e-12 before the log. Positive exactly on success.
double attack_loss(const VictimResponse& resp, int true_label, std::optional<int> target = std::nullopt);

inline bool attack_succeeded(double loss) { return loss > 0.0; }

/// One victim query: the edits relative to the stage's base graph.
struct QueryRecord {
  std::size_t stage = 0;
  EditSet edits;
  double loss = 0.0;
  /// Session queries spent by this attack once this query was sent.
  std::size_t queries = 0;
};

struct AttackTrace {
  std::string attacker;
  int true_label = 0;
  std::optional<int> target;
  Budget budget;
  std::vector<QueryRecord> records;
  /// Edit committed when stage i ended; base of stage i+1 = base_i + committed[i].
  std::vector<EditSet> committed;

  /// Base graph of `stage`, replayed from the original graph.
  Graph stage_base(const Graph& original, std::size_t stage) const;
};

struct AttackResult {
  bool success = false;
  std::size_t queries = 0;
  /// Edits from the original graph to the reported graph, in application order.
  EditSet edits;
  std::size_t net_edits = 0;
  /// Highest loss observed so far, after every query.
  std::vector<double> loss_curve;
  std::optional<Graph> adversarial;
  AttackTrace trace;

  double best_loss() const { return loss_curve.empty() ? -HUGE_VAL : loss_curve.back(); }
};

/// Bayesian optimisation over one-edit candidates, one committed edit per stage.
AttackResult grabnel_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg);

/// Same staging as grabnel_attack with random candidates in place of surrogate proposals.
AttackResult sequential_random_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg);

/// Independent random edit sets of the full budget Δ, one query each.
AttackResult random_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg);

/// Elitist mutation-only genetic search over full-Δ edit sets; every fitness is a victim query.
AttackResult genetic_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg);

/// Bayesian optimisation proposing all Δ edits jointly, without stages.
AttackResult grabnel_no_sequential_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg);

enum class Attacker { Grabnel, Random, SequentialRandom, Genetic, GrabnelNoSequential };

std::string to_string(Attacker a);
Attacker parse_attacker(const std::string& text);

AttackResult run_attacker(Attacker a, VictimSession& session, const Graph& g, int y, const AttackConfig& cfg);

}  // namespace grabnel
