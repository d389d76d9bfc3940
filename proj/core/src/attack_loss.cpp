#include <algorithm>
#include <cmath>

#include "grabnel/attack.hpp"
#include "grabnel/errors.hpp"

namespace grabnel {

void AttackConfig::validate() const {
  if (!(budget_ratio > 0.0) || !std::isfinite(budget_ratio)) throw InvalidConfig("budget ratio must be positive");
  if (query_multiplier < 1) throw InvalidConfig("query multiplier must be at least 1");
  if (query_cap < 1) throw InvalidConfig("query cap must be at least 1");
  if (wl_iterations < 0) throw InvalidConfig("WL iterations must be non-negative");
  if (max_edits && *max_edits == 0) throw InvalidConfig("max_edits must be positive");
  if (max_queries && *max_queries == 0) throw InvalidConfig("max_queries must be positive");
  if (genetic_population < 2 || genetic_parents < 1 || genetic_parents > genetic_population) {
    throw InvalidConfig("genetic population needs >= 2 members and 1..population parents");
  }
  acquisition.validate();
}

Budget compute_budget(const Graph& g, const AttackConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<double>(g.num_nodes());
  Budget b;
  if (cfg.max_edits) {
    b.edits = *cfg.max_edits;
  } else if (cfg.mode == AttackMode::Inject) {
    b.edits = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.constraints.max_injected_fraction * n)));
  } else {
    b.edits = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.budget_ratio * n * n)));
  }
  const std::size_t uncapped = cfg.max_queries ? *cfg.max_queries : cfg.query_multiplier * b.edits;
  b.queries = std::min(uncapped, cfg.query_cap);
  if (b.queries < b.edits) {
    throw InvalidConfig("query budget " + std::to_string(b.queries) + " is below the edit budget " +
                        std::to_string(b.edits));
  }
  return b;
}

std::vector<std::size_t> stage_budgets(const Budget& budget) {
  if (budget.edits == 0) return {};
  std::vector<std::size_t> out(budget.edits, budget.queries / budget.edits);
  out.back() += budget.queries % budget.edits;
  return out;
}

double attack_loss(const VictimResponse& resp, int true_label, std::optional<int> target) {
  const auto& f = resp.class_scores;
  const auto c = static_cast<int>(f.size());
  if (true_label < 0 || true_label >= c) throw InvalidConfig("true label outside the class range");
  auto logp = [&](int k) { return std::log(std::max(f[static_cast<std::size_t>(k)], 1e-12)); };
  if (target) {
    if (*target < 0 || *target >= c || *target == true_label) throw InvalidConfig("invalid target class");
    return logp(*target) - logp(true_label);
  }
  if (c < 2) return -HUGE_VAL;
  double best = -HUGE_VAL;
  for (int k = 0; k < c; ++k) {
    if (k != true_label) best = std::max(best, logp(k));
  }
  return best - logp(true_label);
}

Graph AttackTrace::stage_base(const Graph& original, std::size_t stage) const {
  Graph base = original;
  for (std::size_t i = 0; i < stage && i < committed.size(); ++i) base = apply_edits(base, committed[i]);
  return base;
}

std::string to_string(Attacker a) {
  switch (a) {
    case Attacker::Grabnel: return "grabnel";
    case Attacker::Random: return "random";
    case Attacker::SequentialRandom: return "sequential-random";
    case Attacker::Genetic: return "genetic";
    case Attacker::GrabnelNoSequential: return "grabnel-no-sequential";
  }
  return "unknown";
}

Attacker parse_attacker(const std::string& text) {
  for (auto a : {Attacker::Grabnel, Attacker::Random, Attacker::SequentialRandom, Attacker::Genetic,
                 Attacker::GrabnelNoSequential}) {
    if (to_string(a) == text) return a;
  }
  throw InvalidConfig("unknown attacker '" + text + "'");
}

AttackResult run_attacker(Attacker a, VictimSession& session, const Graph& g, int y, const AttackConfig& cfg) {
  switch (a) {
    case Attacker::Grabnel: return grabnel_attack(session, g, y, cfg);
    case Attacker::Random: return random_attack(session, g, y, cfg);
    case Attacker::SequentialRandom: return sequential_random_attack(session, g, y, cfg);
    case Attacker::Genetic: return genetic_attack(session, g, y, cfg);
    case Attacker::GrabnelNoSequential: return grabnel_no_sequential_attack(session, g, y, cfg);
  }
  throw InvalidConfig("unknown attacker");
}

}  // namespace grabnel
