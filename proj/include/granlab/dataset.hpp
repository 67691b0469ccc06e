#pragma once

#include <span>
#include <string>
#include <vector>

#include "granlab/hierarchy.hpp"
#include "granlab/types.hpp"

namespace granlab {

// Features with fine labels and the coarse partition they belong to.
struct LabeledDataset {
  Matrix features;                       // P x d
  std::vector<int> fine_labels;          // P entries in 0..K-1
  Hierarchy hierarchy = Hierarchy::binary();
  std::string name;
  std::vector<std::string> fine_names;   // K entries
  std::vector<int> circle_index;         // synthetic circles only: 0-based circle per sample

  std::size_t size() const { return fine_labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
  int K() const { return hierarchy.K(); }

  std::vector<int> coarse_labels() const { return hierarchy.coarse_labels(fine_labels); }
  Matrix one_hot_labels() const;

  // Rows in the given order; metadata carried along.
  LabeledDataset subset(std::span<const std::size_t> rows) const;

  // Throws ConfigError when sizes disagree or a label is out of range.
  void validate() const;
};

}  // namespace granlab
