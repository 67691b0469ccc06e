#include "granlab/dataset.hpp"

#include <string>

#include "granlab/errors.hpp"
#include "granlab/losses.hpp"

namespace granlab {

Matrix LabeledDataset::one_hot_labels() const { return one_hot(fine_labels, K()); }

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.hierarchy = hierarchy;
  out.name = name;
  out.fine_names = fine_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.fine_labels.resize(rows.size());
  if (!circle_index.empty()) out.circle_index.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= size()) throw DomainError("subset row " + std::to_string(r) + " out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(r));
    out.fine_labels[i] = fine_labels[r];
    if (!circle_index.empty()) out.circle_index[i] = circle_index[r];
  }
  return out;
}

void LabeledDataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != fine_labels.size()) {
    throw ConfigError("dataset '" + name + "': " + std::to_string(features.rows()) +
                      " feature rows but " + std::to_string(fine_labels.size()) + " labels");
  }
  if (features.cols() < 1) throw ConfigError("dataset '" + name + "': feature dimension must be >= 1");
  for (int y : fine_labels) {
    if (y < 0 || y >= K()) {
      throw ConfigError("dataset '" + name + "': label " + std::to_string(y) + " outside 0.." +
                        std::to_string(K() - 1));
    }
  }
  if (!fine_names.empty() && fine_names.size() != static_cast<std::size_t>(K())) {
    throw ConfigError("dataset '" + name + "': expected " + std::to_string(K()) + " class names");
  }
  if (!circle_index.empty() && circle_index.size() != fine_labels.size()) {
    throw ConfigError("dataset '" + name + "': circle metadata length mismatch");
  }
}

}  // namespace granlab
