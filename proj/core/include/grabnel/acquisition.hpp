#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <span>
#include <vector>

#include "grabnel/candidates.hpp"
#include "grabnel/surrogate.hpp"
#include "grabnel/wl_features.hpp"

namespace grabnel {

struct AcquisitionConfig {
  std::size_t max_acq_evaluations = 500;
  /// Random members of the initial population; population_fill more are
  /// mutated from the top mutation_pool_from_top_k queries of the stage.
  std::size_t init_random_candidates = 50;
  /// Initial population size when the stage has no queries yet (all random).
  std::size_t random_fallback_candidates = 100;
  std::size_t mutation_pool_from_top_k = 3;
  std::size_t population_fill = 50;
  std::size_t evolution_rounds = 10;
  std::size_t batch_query_size = 5;
  std::size_t breeding_top_k = 3;

  /// Throws InvalidConfig unless every count is positive and batch <= fill.
  void validate() const;
};

/// EI for maximisation. Negative variance is treated as zero.
double expected_improvement(double mean, double variance, double best_observed);

struct Candidate {
  EditSet edits;
  double acquisition_value = 0.0;
  std::size_t birth_round = 0;
};

/// A queried edit set (relative to the current base) and its observed loss.
struct ScoredEdits {
  EditSet edits;
  double loss = 0.0;
};

/// Scores a batch of candidate edit sets; larger is better.
using AcquisitionFn = std::function<std::vector<double>(std::span<const EditSet>)>;

struct AcquisitionResult {
  std::vector<Candidate> batch;
  /// Distinct candidates scored by the acquisition function.
  std::size_t evaluations = 0;
};

/// Genetic search for the acquisition maximisers among edit sets of
/// `edit_set_size` edits on `base`. Edit sets in `exclude` (canonical form)
/// are scored but never returned.
AcquisitionResult optimise_acquisition(const AcquisitionFn& acquisition, const Graph& base,
                                       std::span<const ScoredEdits> stage_history,
                                       const CandidateGenerator& generator,
                                       const AcquisitionConfig& cfg, std::size_t edit_set_size,
                                       const std::set<EditSet>& exclude, Rng& rng);

/// EI over candidate graphs base + edits, scored by a fitted surrogate on the
/// encoder's feature space.
AcquisitionFn make_ei_acquisition(const SurrogatePosterior& post, const WLEncoder& encoder,
                                  const Graph& base, double best_observed);

}  // namespace grabnel
