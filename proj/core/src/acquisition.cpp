#include "grabnel/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numbers>

#include "grabnel/errors.hpp"

namespace grabnel {

void AcquisitionConfig::validate() const {
  if (max_acq_evaluations == 0 || init_random_candidates == 0 || random_fallback_candidates == 0 ||
      mutation_pool_from_top_k == 0 || population_fill == 0 || evolution_rounds == 0 ||
      batch_query_size == 0 || breeding_top_k == 0) {
    throw InvalidConfig("acquisition counts must be positive");
  }
  if (batch_query_size > population_fill) {
    throw InvalidConfig("batch_query_size must not exceed population_fill");
  }
}

double expected_improvement(double mean, double variance, double best_observed) {
  const double gain = mean - best_observed;
  if (!(variance > 0.0)) return std::max(0.0, gain);
  const double sigma = std::sqrt(variance);
  const double z = gain / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gain * cdf + sigma * pdf);
}

namespace {

struct Scored {
  double value;
  std::size_t birth_round;
};

bool better(const Scored& a, const EditSet& ea, const Scored& b, const EditSet& eb) {
  if (a.value != b.value) return a.value > b.value;
  if (a.birth_round != b.birth_round) return a.birth_round < b.birth_round;
  return ea < eb;
}

class Search {
 public:
  Search(const AcquisitionFn& fn, const AcquisitionConfig& cfg) : fn_(fn), cfg_(cfg) {}

  std::size_t remaining() const { return cfg_.max_acq_evaluations - scores_.size(); }
  std::size_t evaluations() const { return scores_.size(); }

  /// Scores every unseen member of `batch` (in order) while budget remains;
  /// returns the members that carry a score.
  std::vector<EditSet> score(std::vector<EditSet> batch, std::size_t round) {
    std::vector<EditSet> fresh;
    std::set<EditSet> pending;
    for (const auto& e : batch) {
      if (scores_.count(e) || pending.count(e)) continue;
      if (fresh.size() >= remaining()) break;
      pending.insert(e);
      fresh.push_back(e);
    }
    if (!fresh.empty()) {
      const auto values = fn_(fresh);
      if (values.size() != fresh.size()) {
        throw DimensionMismatch("acquisition returned the wrong number of values");
      }
      for (std::size_t i = 0; i < fresh.size(); ++i) {
        const double v = std::isfinite(values[i]) ? values[i] : -HUGE_VAL;
        scores_.emplace(fresh[i], Scored{v, round});
      }
    }
    std::vector<EditSet> kept;
    for (auto& e : batch) {
      if (scores_.count(e)) kept.push_back(std::move(e));
    }
    return kept;
  }

  const Scored& at(const EditSet& e) const { return scores_.at(e); }
  const std::map<EditSet, Scored>& all() const { return scores_; }

 private:
  const AcquisitionFn& fn_;
  const AcquisitionConfig& cfg_;
  std::map<EditSet, Scored> scores_;
};

std::optional<EditSet> fresh_random(const CandidateGenerator& gen, const Graph& base,
                                    std::size_t size, Rng& rng) {
  auto e = gen.random_edit_set(base, size, rng);
  if (!e) return std::nullopt;
  return canonical(std::move(*e));
}

}  // namespace

AcquisitionResult optimise_acquisition(const AcquisitionFn& acquisition, const Graph& base,
                                       std::span<const ScoredEdits> stage_history,
                                       const CandidateGenerator& generator,
                                       const AcquisitionConfig& cfg, std::size_t edit_set_size,
                                       const std::set<EditSet>& exclude, Rng& rng) {
  cfg.validate();
  Search search(acquisition, cfg);

  auto child_of = [&](const EditSet& parent) -> std::optional<EditSet> {
    try {
      return canonical(generator.mutate(parent, base, rng));
    } catch (const MutationExhausted&) {
      return fresh_random(generator, base, edit_set_size, rng);
    }
  };

  // Initial population.
  std::vector<EditSet> seed;
  if (stage_history.empty()) {
    for (std::size_t i = 0; i < cfg.random_fallback_candidates; ++i) {
      if (auto e = fresh_random(generator, base, edit_set_size, rng)) seed.push_back(std::move(*e));
    }
  } else {
    std::vector<std::size_t> order(stage_history.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return stage_history[a].loss > stage_history[b].loss;
    });
    order.resize(std::min(order.size(), cfg.mutation_pool_from_top_k));
    for (std::size_t i = 0; i < cfg.init_random_candidates; ++i) {
      if (auto e = fresh_random(generator, base, edit_set_size, rng)) seed.push_back(std::move(*e));
    }
    for (std::size_t i = 0; i < cfg.population_fill; ++i) {
      const EditSet& parent = stage_history[order[i % order.size()]].edits;
      if (auto e = child_of(canonical(parent))) seed.push_back(std::move(*e));
    }
  }

  std::deque<EditSet> population;
  for (auto& e : search.score(std::move(seed), 0)) population.push_back(std::move(e));

  for (std::size_t round = 1; round <= cfg.evolution_rounds && search.remaining() > 0; ++round) {
    if (population.empty()) break;
    std::vector<EditSet> ranked(population.begin(), population.end());
    std::sort(ranked.begin(), ranked.end());
    ranked.erase(std::unique(ranked.begin(), ranked.end()), ranked.end());
    std::sort(ranked.begin(), ranked.end(), [&](const EditSet& a, const EditSet& b) {
      return better(search.at(a), a, search.at(b), b);
    });
    ranked.resize(std::min(ranked.size(), cfg.breeding_top_k));

    const std::size_t per_parent = (cfg.population_fill + ranked.size() - 1) / ranked.size();
    std::vector<EditSet> children;
    for (const auto& parent : ranked) {
      for (std::size_t c = 0; c < per_parent && children.size() < cfg.population_fill; ++c) {
        if (auto e = child_of(parent)) children.push_back(std::move(*e));
      }
    }
    for (auto& e : search.score(std::move(children), round)) population.push_back(std::move(e));
    while (population.size() > cfg.population_fill) population.pop_front();
  }

  std::vector<const std::pair<const EditSet, Scored>*> pool;
  for (const auto& entry : search.all()) {
    if (!exclude.count(entry.first)) pool.push_back(&entry);
  }
  std::sort(pool.begin(), pool.end(), [](auto* a, auto* b) {
    return better(a->second, a->first, b->second, b->first);
  });

  AcquisitionResult result;
  result.evaluations = search.evaluations();
  for (std::size_t i = 0; i < pool.size() && result.batch.size() < cfg.batch_query_size; ++i) {
    result.batch.push_back(Candidate{pool[i]->first, pool[i]->second.value, pool[i]->second.birth_round});
  }
  return result;
}

AcquisitionFn make_ei_acquisition(const SurrogatePosterior& post, const WLEncoder& encoder,
                                  const Graph& base, double best_observed) {
  return [&post, &encoder, base, best_observed](std::span<const EditSet> batch) {
    std::vector<Graph> graphs;
    graphs.reserve(batch.size());
    for (const auto& e : batch) graphs.push_back(apply_edits(base, e));
    const FeatureMatrix rows = encoder.encode(graphs);
    const auto preds = predict_rows(post, rows);
    std::vector<double> out(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      out[i] = expected_improvement(preds[i].mean, preds[i].variance, best_observed);
    }
    return out;
  };
}

}  // namespace grabnel
