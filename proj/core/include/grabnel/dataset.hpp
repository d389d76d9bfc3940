#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "grabnel/graph.hpp"

namespace grabnel {

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct LabeledDataset {
  std::vector<Graph> graphs;
  std::vector<int> labels;
  int num_classes = 0;
  DatasetSplit split;

  std::size_t size() const { return graphs.size(); }

  /// Throws InvalidConfig when labels/splits break the dataset invariants.
  void validate() const;
};

/// Shuffles indices with `seed` and cuts them into train/validation/test by fraction.
DatasetSplit make_split(std::size_t size, double train_fraction, double validation_fraction,
                        std::uint64_t seed);

/// Erdős–Rényi component-count task: every graph has 1, 2 or 3 connected
/// components and its class index is (components - 1).
struct ERGenConfig {
  std::size_t min_nodes = 15;
  std::size_t max_nodes = 20;
  std::vector<int> component_range{1, 2, 3};
  double edge_probability = 0.15;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  double validation_fraction = 0.15;
};

LabeledDataset generate_er_dataset(const ERGenConfig& cfg, std::size_t size);

}  // namespace grabnel
