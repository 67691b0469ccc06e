#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "granlab/circles.hpp"
#include "granlab/dataset.hpp"

namespace granlab {

// JSON document holding features, fine labels, hierarchy, class names, circle
// metadata and (for synthetic data) the generating spec. Features that are all
// multiples of 1/255 are stored as bytes under "pixels".
std::string dataset_to_json(const LabeledDataset& data,
                            const std::optional<CircleSpec>& spec = std::nullopt);
LabeledDataset dataset_from_json(const std::string& text);

void save_dataset(const LabeledDataset& data, const std::filesystem::path& path,
                  const std::optional<CircleSpec>& spec = std::nullopt);
LabeledDataset load_dataset_file(const std::filesystem::path& path);

}  // namespace granlab
