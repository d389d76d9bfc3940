#pragma once

#include <filesystem>
#include <string>

#include "grabnel/dataset.hpp"

namespace grabnel {

struct TUParseOptions {
  /// Dataset prefix (files are <name>_A.txt etc.); empty means "find the *_A.txt file".
  std::string name;
  /// Read the first column of <name>_edge_attributes.txt as edge weights.
  bool use_edge_weights = false;
};

/// Reads the TUDataset text format. Graph and node labels are remapped to
/// contiguous 0-based indices in ascending order of their original values; node
/// attributes, when present, make every graph ContinuousFeatures. The split is left empty.
LabeledDataset parse_tudataset(const std::filesystem::path& dir, const TUParseOptions& options = {});

/// Writes `ds` in the TUDataset text format under `dir` with prefix `name`.
void write_tudataset(const LabeledDataset& ds, const std::filesystem::path& dir,
                     const std::string& name);

}  // namespace grabnel
