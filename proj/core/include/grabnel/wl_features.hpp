#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "grabnel/graph.hpp"

namespace grabnel {

/// One row per graph.
using FeatureMatrix = Eigen::MatrixXd;

/// Compression dictionaries of the Weisfeiler-Lehman relabelling.
///
/// Level 0 keys are the raw node labels; a level h+1 key is the node's level-h
/// id followed by the sorted level-h ids of its neighbours. Every (level, id)
/// pair owns one feature column. New keys found in a batch are numbered in
/// sorted-key order, level by level, and existing ids and columns never move.
class WLVocabulary {
 public:
  using Key = std::vector<std::int64_t>;

  WLVocabulary() = default;
  explicit WLVocabulary(int iterations) : levels_(static_cast<std::size_t>(iterations) + 1) {}

  int iterations() const { return static_cast<int>(levels_.size()) - 1; }
  std::size_t dimension() const { return column_level_.size(); }
  std::size_t level_size(int h) const { return levels_[static_cast<std::size_t>(h)].size(); }
  /// Level that owns column `c`.
  int column_level(std::size_t c) const { return column_level_[c]; }

  bool operator==(const WLVocabulary&) const = default;

 private:
  friend class WLRunner;

  struct Level {
    std::map<Key, std::int64_t> ids;
    std::vector<std::size_t> columns;  // id -> column
    std::size_t size() const { return columns.size(); }
    bool operator==(const Level&) const = default;
  };

  std::vector<Level> levels_;
  std::vector<int> column_level_;
};

/// Discrete WL feature extraction. Rows count, for h = 0..H, how many nodes of a
/// graph carry each refined label.
class WLExtractor {
 public:
  /// Builds a fresh vocabulary from `graphs` and returns their rows.
  static FeatureMatrix fit(std::span<const Graph> graphs, int iterations, WLVocabulary& vocab);

  /// Extends `vocab` with labels seen in `graphs` and returns their rows against
  /// the extended vocabulary.
  static FeatureMatrix extend(std::span<const Graph> graphs, WLVocabulary& vocab);

  /// Rows against a fixed vocabulary; labels it has never seen are not counted.
  static FeatureMatrix transform(std::span<const Graph> graphs, const WLVocabulary& vocab);
  static Eigen::VectorXd transform(const Graph& graph, const WLVocabulary& vocab);
};

/// Batch convenience: (rows, vocabulary) for `graphs` with H = `iterations`.
std::pair<FeatureMatrix, WLVocabulary> wl_extract_discrete(std::span<const Graph> graphs,
                                                           int iterations);

/// Returns a vocabulary that also covers `new_graphs`; previous columns keep their indices.
WLVocabulary refit_vocabulary(const WLVocabulary& existing, std::span<const Graph> new_graphs);

/// Row layout of continuous WL features.
enum class ContinuousLayout {
  Auto,     // Flatten if all graphs share a node count, else Pool
  Flatten,  // vec(X_h) for h = 0..H; needs equal node counts
  Pool,     // per-level column sums of X_h
};

/// Continuous WL: x^{h+1}(v) = (x^h(v) + mean-weighted neighbour sum) / 2, with the
/// neighbour term taken as zero on isolated nodes. Discrete-labelled graphs raise
/// TypeMismatch; Flatten on graphs of different sizes raises DimensionMismatch.
FeatureMatrix wl_extract_continuous(std::span<const Graph> graphs, int iterations,
                                    ContinuousLayout layout = ContinuousLayout::Auto);

/// Node feature matrices X_0..X_H (n x dim each) of one continuous graph.
std::vector<Eigen::MatrixXd> continuous_wl_levels(const Graph& g, int iterations);

/// Incremental encoder for a growing set of observed graphs plus throwaway
/// candidate batches. Discrete graphs share one vocabulary that grows with the
/// observed set; candidate rows use the current vocabulary only.
class WLEncoder {
 public:
  WLEncoder(int iterations, bool continuous, ContinuousLayout layout = ContinuousLayout::Pool);

  /// Adds graphs to the observed set; returns rows of every observed graph so far.
  const FeatureMatrix& observe(std::span<const Graph> graphs);
  const FeatureMatrix& observed() const { return observed_; }

  FeatureMatrix encode(std::span<const Graph> graphs) const;

  std::size_t dimension() const { return static_cast<std::size_t>(observed_.cols()); }

 private:
  int iterations_;
  bool continuous_;
  ContinuousLayout layout_;
  WLVocabulary vocab_;
  FeatureMatrix observed_;
};

}  // namespace grabnel
