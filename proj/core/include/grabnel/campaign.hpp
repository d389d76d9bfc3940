#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grabnel/attack.hpp"
#include "grabnel/dataset.hpp"

namespace grabnel {

enum class AsrNormalisation { Raw, PerNodeSquared, PerNode };

std::string to_string(AsrNormalisation m);

/// Cumulative attack success rate against normalised query count.
struct ASRCurve {
  AsrNormalisation normalisation = AsrNormalisation::Raw;
  std::vector<double> grid;
  std::vector<double> asr;
};

/// Attack outcome of one eligible graph, as needed for ASR accounting.
struct AsrSample {
  bool success = false;
  std::size_t queries = 0;
  std::size_t budget_queries = 0;
  std::size_t num_nodes = 0;
};

/// `points` log-spaced grid values from the smallest one-query value to the
/// largest normalised budget. The last value equals successes / samples exactly.
ASRCurve asr_curve(std::span<const AsrSample> samples, AsrNormalisation normalisation, std::size_t points = 50);

/// Trapezoidal area under the curve over log10 of the grid, divided by the log range.
double asr_area(const ASRCurve& curve);

using SessionFactory = std::function<std::unique_ptr<VictimSession>()>;

struct CampaignConfig {
  Attacker attacker = Attacker::Grabnel;
  AttackConfig attack;
  /// Nothing is written when empty.
  std::filesystem::path out_dir;
  std::size_t workers = 1;
  /// Attack only the first `max_graphs` eligible graphs (in index order).
  std::optional<std::size_t> max_graphs;
  /// Candidate graphs; the dataset's test split when empty.
  std::vector<std::size_t> indices;
  std::size_t asr_points = 50;
};

struct GraphOutcome {
  std::size_t graph_index = 0;
  int label = 0;
  int predicted = -1;
  std::size_t num_nodes = 0;
  bool eligible = false;
  bool attacked = false;
  bool success = false;
  std::size_t queries = 0;
  std::size_t budget_queries = 0;
  std::size_t net_edits = 0;
  std::string error;
};

struct CampaignSummary {
  std::string attacker;
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  std::size_t attacked = 0;
  std::size_t successes = 0;
  std::size_t errors = 0;
  double clean_accuracy = 0.0;
  double asr = 0.0;
  double post_attack_accuracy = 0.0;
  double mean_net_edits = 0.0;
  double median_net_edits = 0.0;
  std::size_t total_queries = 0;
  std::vector<GraphOutcome> outcomes;
  std::vector<ASRCurve> curves;
};

/// Attacks every originally-correct graph with its own seeded RNG stream
/// (seed derived from cfg.attack.seed and the graph index) and its own session.
/// Writes traces/, results.csv, asr.csv and summary.json into out_dir.
/// Per-graph failures are recorded in the outcome; session creation failures propagate.
CampaignSummary run_campaign(const LabeledDataset& ds, const SessionFactory& victim, const CampaignConfig& cfg);

/// Seed of graph `index`'s attack.
std::uint64_t graph_seed(std::uint64_t campaign_seed, std::size_t index);

struct MetricStats {
  double mean = 0.0;
  /// Sample standard deviation; 0 for a single trial.
  double sd = 0.0;
};

/// Mean and spread of campaign metrics over repeated trials with different seeds.
struct TrialAggregate {
  std::size_t trials = 0;
  MetricStats clean_accuracy;
  MetricStats asr;
  MetricStats post_attack_accuracy;
  MetricStats mean_net_edits;
  /// Aligned with the curves of each summary.
  std::vector<MetricStats> asr_area;
};

/// Throws EmptyInput on no summaries.
TrialAggregate aggregate_trials(std::span<const CampaignSummary> summaries);
std::string aggregate_to_json(const TrialAggregate& a);

std::string summary_to_json(const CampaignSummary& s);
std::string outcomes_to_csv(const CampaignSummary& s);
std::string curves_to_csv(const std::vector<ASRCurve>& curves);

}  // namespace grabnel
