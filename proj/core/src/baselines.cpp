#include <algorithm>

#include "attack_internal.hpp"
#include "grabnel/errors.hpp"

namespace grabnel {

using detail::Recorder;

namespace {

/// A random edit set of the full budget, shrinking when the graph cannot hold that many edits.
std::optional<EditSet> full_budget_set(const CandidateGenerator& gen, const Graph& g, std::size_t size,
                                       const std::set<EditSet>& avoid, Rng& rng) {
  for (std::size_t k = size; k >= 1; --k) {
    if (auto e = detail::random_unqueried(gen, g, k, avoid, rng)) return e;
  }
  return std::nullopt;
}

EditSet best_of(const std::vector<ScoredEdits>& scored) {
  if (scored.empty()) return {};
  return std::max_element(scored.begin(), scored.end(),
                          [](const ScoredEdits& a, const ScoredEdits& b) { return a.loss < b.loss; })
      ->edits;
}

}  // namespace

AttackResult random_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg) {
  Recorder rec(session, g, y, cfg, to_string(Attacker::Random));
  const CandidateGenerator gen(cfg.mode, cfg.constraints, cfg.injection);
  Rng rng(cfg.seed);
  const std::set<EditSet> none;
  std::vector<ScoredEdits> seen;
  while (rec.remaining() > 0 && !rec.succeeded()) {
    // Samples are independent, so repeats are allowed.
    auto e = full_budget_set(gen, g, rec.budget().edits, none, rng);
    if (!e) break;
    seen.push_back({*e, rec.query(apply_edits(g, *e), 0, *e)});
  }
  return rec.finish(best_of(seen));
}

AttackResult genetic_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg) {
  Recorder rec(session, g, y, cfg, to_string(Attacker::Genetic));
  const CandidateGenerator gen(cfg.mode, cfg.constraints, cfg.injection);
  Rng rng(cfg.seed);
  const std::size_t delta = rec.budget().edits;
  std::set<EditSet> queried;
  std::vector<ScoredEdits> all;

  auto evaluate = [&](const EditSet& e) {
    const double loss = rec.query(apply_edits(g, e), 0, e);
    queried.insert(e);
    all.push_back({e, loss});
    return ScoredEdits{e, loss};
  };

  std::vector<ScoredEdits> population;
  while (population.size() < cfg.genetic_population && rec.remaining() > 0 && !rec.succeeded()) {
    auto e = full_budget_set(gen, g, delta, queried, rng);
    if (!e) break;
    population.push_back(evaluate(*e));
  }

  while (!population.empty() && rec.remaining() > 0 && !rec.succeeded()) {
    std::stable_sort(population.begin(), population.end(),
                     [](const ScoredEdits& a, const ScoredEdits& b) { return a.loss > b.loss; });
    const std::size_t parents = std::min(cfg.genetic_parents, population.size());
    std::vector<ScoredEdits> next{population.front()};  // elite survives unchanged
    while (next.size() < cfg.genetic_population && rec.remaining() > 0 && !rec.succeeded()) {
      const auto& parent = population[std::uniform_int_distribution<std::size_t>(0, parents - 1)(rng)];
      std::optional<EditSet> child;
      for (int attempt = 0; attempt < CandidateGenerator::kMutationAttempts && !child; ++attempt) {
        try {
          EditSet c = canonical(gen.mutate(parent.edits, g, rng));
          if (!queried.count(c)) child = std::move(c);
        } catch (const MutationExhausted&) {
          break;
        }
      }
      if (!child) child = full_budget_set(gen, g, delta, queried, rng);
      if (!child) break;
      next.push_back(evaluate(*child));
    }
    if (next.size() == 1) break;
    population = std::move(next);
  }
  return rec.finish(best_of(all));
}

AttackResult grabnel_no_sequential_attack(VictimSession& session, const Graph& g, int y, const AttackConfig& cfg) {
  Recorder rec(session, g, y, cfg, to_string(Attacker::GrabnelNoSequential));
  const CandidateGenerator gen(cfg.mode, cfg.constraints, cfg.injection);
  Rng rng(cfg.seed);
  const std::size_t delta = rec.budget().edits;
  detail::SurrogateModel model(cfg, g);
  std::set<EditSet> queried;
  std::vector<ScoredEdits> history;

  auto ask = [&](const EditSet& e) {
    const Graph perturbed = apply_edits(g, e);
    const double loss = rec.query(perturbed, 0, e);
    queried.insert(e);
    history.push_back({e, loss});
    model.observe(perturbed, loss);
  };

  const std::size_t n_init = std::min(cfg.n_init, rec.budget().queries);
  for (std::size_t i = 0; i < n_init && !rec.succeeded(); ++i) {
    auto e = full_budget_set(gen, g, delta, queried, rng);
    if (!e) break;
    ask(*e);
  }
  while (!history.empty() && rec.remaining() > 0 && !rec.succeeded()) {
    auto batch = model.propose(g, history, gen, delta, queried, rng);
    if (batch.empty()) {
      auto e = full_budget_set(gen, g, delta, queried, rng);
      if (!e) break;
      batch.push_back(std::move(*e));
    }
    for (const auto& e : batch) {
      if (rec.remaining() == 0 || rec.succeeded()) break;
      if (!queried.count(e)) ask(e);
    }
  }
  return rec.finish(best_of(history));
}

}  // namespace grabnel
