#include "grabnel/wl_features.hpp"

#include <algorithm>

#include "grabnel/errors.hpp"

namespace grabnel {

namespace {

constexpr std::int64_t kUnknown = -1;

}  // namespace

class WLRunner {
 public:
  // Computes per-level ids for every node of every graph; extends the vocabulary
  // when `vocab_mut` is non-null.
  static FeatureMatrix run(std::span<const Graph> graphs, const WLVocabulary& vocab,
                           WLVocabulary* vocab_mut);
};

FeatureMatrix WLRunner::run(std::span<const Graph> graphs, const WLVocabulary& vocab_in,
                            WLVocabulary* vocab_mut) {
  for (const auto& g : graphs) {
    if (!g.has_discrete_labels()) {
      throw TypeMismatch("discrete WL extraction needs discrete node labels");
    }
  }
  const WLVocabulary& vocab = vocab_mut ? *vocab_mut : vocab_in;
  const std::size_t levels = static_cast<std::size_t>(vocab.iterations()) + 1;

  // ids[level][graph][node]
  std::vector<std::vector<std::vector<std::int64_t>>> ids(
      levels, std::vector<std::vector<std::int64_t>>(graphs.size()));
  std::vector<std::vector<WLVocabulary::Key>> keys(graphs.size());

  for (std::size_t h = 0; h < levels; ++h) {
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      const Graph& g = graphs[gi];
      auto& gk = keys[gi];
      gk.resize(g.num_nodes());
      for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        auto& key = gk[v];
        key.clear();
        if (h == 0) {
          key.push_back(g.labels()[v]);
          continue;
        }
        const auto& prev = ids[h - 1][gi];
        key.push_back(prev[v]);
        for (NodeId u : g.neighbors(static_cast<NodeId>(v))) key.push_back(prev[u]);
        std::sort(key.begin() + 1, key.end());
      }
    }

    if (vocab_mut != nullptr) {
      auto& level = vocab_mut->levels_[h];
      std::vector<const WLVocabulary::Key*> fresh;
      for (const auto& gk : keys) {
        for (const auto& key : gk) {
          if (!level.ids.count(key)) fresh.push_back(&key);
        }
      }
      std::sort(fresh.begin(), fresh.end(), [](auto* a, auto* b) { return *a < *b; });
      fresh.erase(std::unique(fresh.begin(), fresh.end(), [](auto* a, auto* b) { return *a == *b; }),
                  fresh.end());
      for (const auto* key : fresh) {
        level.ids.emplace(*key, static_cast<std::int64_t>(level.columns.size()));
        level.columns.push_back(vocab_mut->column_level_.size());
        vocab_mut->column_level_.push_back(static_cast<int>(h));
      }
    }

    const auto& level = vocab.levels_[h];
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      auto& out = ids[h][gi];
      out.resize(keys[gi].size());
      for (std::size_t v = 0; v < keys[gi].size(); ++v) {
        const auto& key = keys[gi][v];
        // A key built from an unknown id can never be in the dictionary.
        if (h > 0 && std::find(key.begin(), key.end(), kUnknown) != key.end()) {
          out[v] = kUnknown;
          continue;
        }
        auto it = level.ids.find(key);
        out[v] = it == level.ids.end() ? kUnknown : it->second;
      }
    }
  }

  FeatureMatrix rows = FeatureMatrix::Zero(static_cast<Eigen::Index>(graphs.size()),
                                           static_cast<Eigen::Index>(vocab.dimension()));
  for (std::size_t h = 0; h < levels; ++h) {
    const auto& columns = vocab.levels_[h].columns;
    for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
      for (auto id : ids[h][gi]) {
        if (id != kUnknown) rows(static_cast<Eigen::Index>(gi), static_cast<Eigen::Index>(columns[id])) += 1.0;
      }
    }
  }
  return rows;
}

FeatureMatrix WLExtractor::fit(std::span<const Graph> graphs, int iterations, WLVocabulary& vocab) {
  if (iterations < 0) throw InvalidConfig("WL iterations must be non-negative");
  vocab = WLVocabulary(iterations);
  return WLRunner::run(graphs, vocab, &vocab);
}

FeatureMatrix WLExtractor::extend(std::span<const Graph> graphs, WLVocabulary& vocab) {
  return WLRunner::run(graphs, vocab, &vocab);
}

FeatureMatrix WLExtractor::transform(std::span<const Graph> graphs, const WLVocabulary& vocab) {
  return WLRunner::run(graphs, vocab, nullptr);
}

Eigen::VectorXd WLExtractor::transform(const Graph& graph, const WLVocabulary& vocab) {
  return WLRunner::run(std::span<const Graph>(&graph, 1), vocab, nullptr).row(0).transpose();
}

std::pair<FeatureMatrix, WLVocabulary> wl_extract_discrete(std::span<const Graph> graphs,
                                                           int iterations) {
  WLVocabulary vocab;
  auto rows = WLExtractor::fit(graphs, iterations, vocab);
  return {std::move(rows), std::move(vocab)};
}

WLVocabulary refit_vocabulary(const WLVocabulary& existing, std::span<const Graph> new_graphs) {
  WLVocabulary vocab = existing;
  WLExtractor::extend(new_graphs, vocab);
  return vocab;
}

std::vector<Eigen::MatrixXd> continuous_wl_levels(const Graph& g, int iterations) {
  if (g.has_discrete_labels()) {
    throw TypeMismatch("continuous WL extraction needs continuous node features");
  }
  const auto& f = g.features();
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  const auto dim = static_cast<Eigen::Index>(f.dim);
  std::vector<Eigen::MatrixXd> levels;
  levels.reserve(static_cast<std::size_t>(iterations) + 1);
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index k = 0; k < dim; ++k) x(v, k) = f.values[static_cast<std::size_t>(v * dim + k)];
  }
  levels.push_back(x);
  for (int h = 0; h < iterations; ++h) {
    const auto& prev = levels.back();
    Eigen::MatrixXd next(n, dim);
    for (Eigen::Index v = 0; v < n; ++v) {
      Eigen::RowVectorXd agg = Eigen::RowVectorXd::Zero(dim);
      const auto nbrs = g.neighbors(static_cast<NodeId>(v));
      const auto ws = g.neighbor_weights(static_cast<NodeId>(v));
      for (std::size_t i = 0; i < nbrs.size(); ++i) agg += ws[i] * prev.row(nbrs[i]);
      if (!nbrs.empty()) agg /= static_cast<double>(nbrs.size());
      next.row(v) = 0.5 * (prev.row(v) + agg);
    }
    levels.push_back(std::move(next));
  }
  return levels;
}

FeatureMatrix wl_extract_continuous(std::span<const Graph> graphs, int iterations,
                                    ContinuousLayout layout) {
  if (iterations < 0) throw InvalidConfig("WL iterations must be non-negative");
  if (graphs.empty()) return FeatureMatrix(0, 0);
  for (const auto& g : graphs) {
    if (g.has_discrete_labels()) {
      throw TypeMismatch("continuous WL extraction needs continuous node features");
    }
    if (g.features().dim != graphs.front().features().dim) {
      throw TypeMismatch("continuous graphs disagree on feature dimension");
    }
  }
  const bool same_size = std::all_of(graphs.begin(), graphs.end(), [&](const Graph& g) {
    return g.num_nodes() == graphs.front().num_nodes();
  });
  if (layout == ContinuousLayout::Flatten && !same_size) {
    throw DimensionMismatch("flattened continuous WL rows need equal node counts");
  }
  const bool flatten = layout == ContinuousLayout::Flatten || (layout == ContinuousLayout::Auto && same_size);
  const auto dim = static_cast<Eigen::Index>(graphs.front().features().dim);
  const auto per_level = flatten ? static_cast<Eigen::Index>(graphs.front().num_nodes()) * dim : dim;
  FeatureMatrix rows(static_cast<Eigen::Index>(graphs.size()), per_level * (iterations + 1));
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto levels = continuous_wl_levels(graphs[gi], iterations);
    for (std::size_t h = 0; h < levels.size(); ++h) {
      const auto& x = levels[h];
      auto block = rows.row(static_cast<Eigen::Index>(gi)).segment(static_cast<Eigen::Index>(h) * per_level, per_level);
      if (flatten) {
        // vec() stacks node rows: [x(0), x(1), ...].
        for (Eigen::Index v = 0; v < x.rows(); ++v) block.segment(v * dim, dim) = x.row(v);
      } else {
        block = x.colwise().sum();
      }
    }
  }
  return rows;
}

WLEncoder::WLEncoder(int iterations, bool continuous, ContinuousLayout layout)
    : iterations_(iterations), continuous_(continuous), layout_(layout), vocab_(iterations) {
  if (iterations < 0) throw InvalidConfig("WL iterations must be non-negative");
}

const FeatureMatrix& WLEncoder::observe(std::span<const Graph> graphs) {
  if (graphs.empty()) return observed_;
  FeatureMatrix fresh = continuous_ ? wl_extract_continuous(graphs, iterations_, layout_)
                                    : WLExtractor::extend(graphs, vocab_);
  if (observed_.rows() == 0) {
    observed_ = std::move(fresh);
    return observed_;
  }
  if (fresh.cols() < observed_.cols()) {
    throw DimensionMismatch("observed graphs produced fewer feature columns than before");
  }
  // Columns added by the new graphs are zero for every earlier graph.
  FeatureMatrix grown = FeatureMatrix::Zero(observed_.rows() + fresh.rows(), fresh.cols());
  grown.topLeftCorner(observed_.rows(), observed_.cols()) = observed_;
  grown.bottomRows(fresh.rows()) = fresh;
  observed_ = std::move(grown);
  return observed_;
}

FeatureMatrix WLEncoder::encode(std::span<const Graph> graphs) const {
  if (continuous_) {
    FeatureMatrix rows = wl_extract_continuous(graphs, iterations_, layout_);
    if (observed_.rows() > 0 && rows.rows() > 0 && rows.cols() != observed_.cols()) {
      throw DimensionMismatch("candidate rows disagree with observed feature dimension");
    }
    return rows;
  }
  return WLExtractor::transform(graphs, vocab_);
}

}  // namespace grabnel
