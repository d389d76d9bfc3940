#include "grabnel/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "grabnel/algorithms.hpp"
#include "grabnel/errors.hpp"

namespace grabnel {

void LabeledDataset::validate() const {
  if (labels.size() != graphs.size()) throw InvalidConfig("labels and graphs differ in length");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw InvalidConfig("label out of range: " + std::to_string(y));
  }
  std::set<std::size_t> seen;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (std::size_t idx : *part) {
      if (idx >= graphs.size()) throw InvalidConfig("split index out of range");
      if (!seen.insert(idx).second) throw InvalidConfig("splits are not disjoint");
    }
  }
}

DatasetSplit make_split(std::size_t size, double train_fraction, double validation_fraction,
                        std::uint64_t seed) {
  if (train_fraction < 0 || validation_fraction < 0 || train_fraction + validation_fraction > 1) {
    throw InvalidConfig("split fractions must be non-negative and sum to at most 1");
  }
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ 0x5eed5b17ULL);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(size));
  const auto n_val = static_cast<std::size_t>(validation_fraction * static_cast<double>(size));
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  for (auto* part : {&split.train, &split.validation, &split.test}) {
    std::sort(part->begin(), part->end());
  }
  return split;
}

namespace {

/// Uniform composition of `total` into `parts` sizes, each at least `min_size`.
std::vector<std::size_t> random_partition(std::size_t total, std::size_t parts,
                                          std::size_t min_size, std::mt19937_64& rng) {
  const std::size_t extra = total - parts * min_size;
  // Stars and bars: choose parts-1 bar positions among extra+parts-1 slots.
  std::vector<std::size_t> slots(extra + parts - 1);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<std::size_t> bars(slots.begin(), slots.begin() + (parts - 1));
  std::sort(bars.begin(), bars.end());
  std::vector<std::size_t> sizes;
  std::size_t prev = 0;
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const std::size_t start = (i == 0) ? 0 : bars[i - 1] + 1;
    sizes.push_back(bars[i] - start + min_size);
    prev = bars[i] + 1;
  }
  sizes.push_back(extra + parts - 1 - prev + min_size);
  return sizes;
}

void connect_component(std::span<const NodeId> members, double p, std::mt19937_64& rng,
                       std::set<Edge>& edges) {
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (coin(rng)) edges.insert(make_edge(members[i], members[j]));
    }
  }
  UnionFind uf(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      if (edges.count(make_edge(members[i], members[j]))) uf.unite(i, j);
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
  const std::size_t max_attempts = 1000 * members.size() * members.size();
  for (std::size_t attempt = 0; uf.set_count() > 1; ++attempt) {
    if (attempt >= max_attempts) {
      throw GenerationFailure("could not connect an ER component of size " +
                              std::to_string(members.size()));
    }
    const std::size_t a = pick(rng);
    const std::size_t b = pick(rng);
    if (a == b || uf.connected(a, b)) continue;
    uf.unite(a, b);
    edges.insert(make_edge(members[a], members[b]));
  }
}

}  // namespace

LabeledDataset generate_er_dataset(const ERGenConfig& cfg, std::size_t size) {
  if (size == 0) throw InvalidConfig("dataset size must be positive");
  if (cfg.min_nodes > cfg.max_nodes) throw InvalidConfig("min_nodes > max_nodes");
  if (!(cfg.edge_probability > 0.0 && cfg.edge_probability < 1.0)) {
    throw InvalidConfig("edge_probability must lie in (0, 1)");
  }
  if (cfg.component_range.empty()) throw InvalidConfig("component_range is empty");
  const int max_components = *std::max_element(cfg.component_range.begin(), cfg.component_range.end());
  if (*std::min_element(cfg.component_range.begin(), cfg.component_range.end()) < 1) {
    throw InvalidConfig("component counts must be >= 1");
  }
  if (cfg.min_nodes < 2 * static_cast<std::size_t>(max_components)) {
    throw InvalidConfig("min_nodes too small for the largest component count");
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick_components(0, cfg.component_range.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_nodes(cfg.min_nodes, cfg.max_nodes);

  LabeledDataset ds;
  ds.num_classes = max_components;
  ds.graphs.reserve(size);
  ds.labels.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    const int k = cfg.component_range[pick_components(rng)];
    const std::size_t n = pick_nodes(rng);
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::shuffle(perm.begin(), perm.end(), rng);

    std::set<Edge> edges;
    std::size_t offset = 0;
    for (std::size_t part : random_partition(n, static_cast<std::size_t>(k), 2, rng)) {
      connect_component(std::span<const NodeId>(perm.data() + offset, part), cfg.edge_probability,
                        rng, edges);
      offset += part;
    }
    ds.graphs.push_back(Graph::unlabeled(n, {edges.begin(), edges.end()}));
    ds.labels.push_back(k - 1);
  }
  ds.split = make_split(size, cfg.train_fraction, cfg.validation_fraction, cfg.seed);
  return ds;
}

}  // namespace grabnel
