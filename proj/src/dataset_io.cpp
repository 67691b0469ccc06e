#include "granlab/dataset_io.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "granlab/errors.hpp"
#include "granlab/harness_io.hpp"

namespace granlab {
namespace {

using nlohmann::json;

bool byte_valued(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    const double b = std::round(v * 255.0);
    if (!(b >= 0.0 && b <= 255.0) || b / 255.0 != v) return false;
  }
  return true;
}

json circle_spec_json(const CircleSpec& s) {
  json j = {{"K", s.K},
            {"n_points", s.n_points},
            {"redundancy", s.redundancy},
            {"sector_offset_per_circle", s.sector_offset_per_circle},
            {"seed", s.seed}};
  if (s.radial_jitter) j["radial_jitter"] = *s.radial_jitter;
  return j;
}

}  // namespace

std::string dataset_to_json(const LabeledDataset& data, const std::optional<CircleSpec>& spec) {
  data.validate();
  json j;
  j["format"] = "granlab-dataset";
  j["version"] = 1;
  j["name"] = data.name;
  j["K"] = data.K();
  j["d"] = data.dim();
  j["P"] = data.size();
  j["fine_names"] = data.fine_names;
  j["hierarchy"] = {{"c0", data.hierarchy.c0()}, {"c1", data.hierarchy.c1()}};
  j["fine_labels"] = data.fine_labels;
  if (!data.circle_index.empty()) j["circle_index"] = data.circle_index;
  if (spec) j["spec"] = circle_spec_json(*spec);

  const auto rows = static_cast<std::size_t>(data.features.rows());
  const auto cols = static_cast<std::size_t>(data.features.cols());
  if (byte_valued(data.features)) {
    // byte / 255 reproduces each feature exactly.
    std::vector<std::uint8_t> pixels(rows * cols);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      pixels[i] = static_cast<std::uint8_t>(std::lround(data.features.data()[i] * 255.0));
    }
    j["pixels"] = pixels;
  } else {
    json feats = json::array();
    for (std::size_t r = 0; r < rows; ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < cols; ++c) {
        row.push_back(data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      }
      feats.push_back(std::move(row));
    }
    j["features"] = std::move(feats);
  }
  return j.dump();
}

LabeledDataset dataset_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "granlab-dataset") throw ConfigError("not a granlab dataset document");
    LabeledDataset data;
    const int K = j.at("K").get<int>();
    const int d = j.at("d").get<int>();
    data.name = j.value("name", "");
    data.hierarchy = Hierarchy(K, j.at("hierarchy").at("c0").get<std::vector<int>>(),
                               j.at("hierarchy").at("c1").get<std::vector<int>>());
    data.fine_names = j.value("fine_names", std::vector<std::string>{});
    data.fine_labels = j.at("fine_labels").get<std::vector<int>>();
    data.circle_index = j.value("circle_index", std::vector<int>{});
    const auto P = data.fine_labels.size();
    data.features.resize(static_cast<Eigen::Index>(P), d);
    if (j.contains("pixels")) {
      const auto pixels = j.at("pixels").get<std::vector<std::uint8_t>>();
      if (pixels.size() != P * static_cast<std::size_t>(d)) throw ConfigError("dataset pixel count mismatch");
      for (std::size_t i = 0; i < pixels.size(); ++i) data.features.data()[i] = normalize(pixels[i]);
    } else {
      const auto& feats = j.at("features");
      if (feats.size() != P) throw ConfigError("dataset feature row count mismatch");
      for (std::size_t r = 0; r < P; ++r) {
        const auto& row = feats[r];
        if (row.size() != static_cast<std::size_t>(d)) throw ConfigError("dataset feature width mismatch");
        for (int c = 0; c < d; ++c) data.features(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)].get<double>();
      }
    }
    data.validate();
    return data;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed dataset document: ") + e.what());
  }
}

void save_dataset(const LabeledDataset& data, const std::filesystem::path& path,
                  const std::optional<CircleSpec>& spec) {
  write_text_file(path, dataset_to_json(data, spec));
}

LabeledDataset load_dataset_file(const std::filesystem::path& path) {
  return dataset_from_json(read_text_file(path));
}

}  // namespace granlab
