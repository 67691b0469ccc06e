#include "granlab/data_real.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "granlab/errors.hpp"
#include "granlab/rng.hpp"

namespace granlab {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size()) {
    throw ParseError(std::string(what) + ": truncated header", bytes.size());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string canonical_class(const std::string& dataset, const std::string& name) {
  std::string n = lower(name);
  if (dataset == "cifar10" && n == "car") return "automobile";
  return n;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

}  // namespace

RawImageSet parse_idx(std::span<const std::uint8_t> image_file,
                      std::span<const std::uint8_t> label_file) {
  if (read_be32(image_file, 0, "IDX image file") != kIdxImageMagic) {
    throw ParseError("IDX image file: bad magic number (expected 0x00000803)", 0);
  }
  if (read_be32(label_file, 0, "IDX label file") != kIdxLabelMagic) {
    throw ParseError("IDX label file: bad magic number (expected 0x00000801)", 0);
  }
  const std::uint32_t n_images = read_be32(image_file, 4, "IDX image file");
  const std::uint32_t rows = read_be32(image_file, 8, "IDX image file");
  const std::uint32_t cols = read_be32(image_file, 12, "IDX image file");
  const std::uint32_t n_labels = read_be32(label_file, 4, "IDX label file");
  if (n_images != n_labels) {
    throw ParseError("IDX label file: count " + std::to_string(n_labels) +
                         " does not match image count " + std::to_string(n_images),
                     4);
  }
  if (rows == 0 || cols == 0) throw ParseError("IDX image file: zero image dimension", 8);

  const std::size_t dim = std::size_t{rows} * cols;
  const std::size_t need_images = 16 + std::size_t{n_images} * dim;
  if (image_file.size() < need_images) {
    throw ParseError("IDX image file: truncated payload, expected " + std::to_string(need_images) +
                         " bytes",
                     image_file.size());
  }
  if (image_file.size() > need_images) {
    throw ParseError("IDX image file: trailing bytes after payload", need_images);
  }
  const std::size_t need_labels = 8 + std::size_t{n_labels};
  if (label_file.size() < need_labels) {
    throw ParseError("IDX label file: truncated payload, expected " + std::to_string(need_labels) +
                         " bytes",
                     label_file.size());
  }
  if (label_file.size() > need_labels) {
    throw ParseError("IDX label file: trailing bytes after payload", need_labels);
  }

  RawImageSet set;
  set.rows = static_cast<int>(rows);
  set.cols = static_cast<int>(cols);
  set.channels = 1;
  set.pixels.assign(image_file.begin() + 16, image_file.begin() + static_cast<std::ptrdiff_t>(need_images));
  set.labels.assign(label_file.begin() + 8, label_file.begin() + static_cast<std::ptrdiff_t>(need_labels));
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    if (set.labels[i] > 9) throw ParseError("IDX label file: label " + std::to_string(set.labels[i]) + " > 9", 8 + i);
  }
  return set;
}

RawImageSet parse_cifar10(std::span<const std::vector<std::uint8_t>> batch_files) {
  RawImageSet set;
  set.rows = 32;
  set.cols = 32;
  set.channels = 3;
  std::size_t total = 0;
  for (const auto& f : batch_files) {
    if (f.empty()) throw ParseError("CIFAR-10 batch: empty stream", 0);
    if (f.size() % kCifarRecordBytes != 0) {
      throw ParseError("CIFAR-10 batch: length " + std::to_string(f.size()) +
                           " is not a multiple of 3073",
                       f.size() - f.size() % kCifarRecordBytes);
    }
    total += f.size() / kCifarRecordBytes;
  }
  if (total == 0) throw ParseError("CIFAR-10: no batch data", 0);
  set.labels.reserve(total);
  set.pixels.reserve(total * (kCifarRecordBytes - 1));
  for (const auto& f : batch_files) {
    for (std::size_t off = 0; off < f.size(); off += kCifarRecordBytes) {
      if (f[off] > 9) throw ParseError("CIFAR-10 batch: label " + std::to_string(f[off]) + " > 9", off);
      set.labels.push_back(f[off]);
      set.pixels.insert(set.pixels.end(), f.begin() + static_cast<std::ptrdiff_t>(off + 1),
                        f.begin() + static_cast<std::ptrdiff_t>(off + kCifarRecordBytes));
    }
  }
  return set;
}

std::vector<std::uint8_t> serialize_idx_images(const RawImageSet& set) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + set.pixels.size());
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(set.count()));
  write_be32(out, static_cast<std::uint32_t>(set.rows));
  write_be32(out, static_cast<std::uint32_t>(set.cols));
  out.insert(out.end(), set.pixels.begin(), set.pixels.end());
  return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const RawImageSet& set) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + set.labels.size());
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(set.count()));
  out.insert(out.end(), set.labels.begin(), set.labels.end());
  return out;
}

std::vector<std::uint8_t> serialize_cifar10(const RawImageSet& set) {
  const std::size_t dim = set.dim();
  if (dim != kCifarRecordBytes - 1) throw ConfigError("CIFAR-10 records hold 3072 pixel bytes");
  std::vector<std::uint8_t> out;
  out.reserve(set.count() * kCifarRecordBytes);
  for (std::size_t i = 0; i < set.count(); ++i) {
    out.push_back(set.labels[i]);
    out.insert(out.end(), set.pixels.begin() + static_cast<std::ptrdiff_t>(i * dim),
               set.pixels.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
  }
  return out;
}

Matrix normalize(std::span<const std::uint8_t> pixels, std::size_t count, std::size_t dim) {
  if (pixels.size() != count * dim) throw ShapeError("pixel buffer does not hold count * dim bytes");
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = normalize(pixels[i * dim + j]);
    }
  }
  return out;
}

std::vector<std::string> GroupingSpec::fine_class_names() const {
  std::vector<std::string> names = c0_names;
  names.insert(names.end(), c1_names.begin(), c1_names.end());
  return names;
}

LabeledDataset apply_grouping(const RawImageSet& raw, const GroupingSpec& spec, const std::string& name) {
  if (spec.c0_names.empty() || spec.c1_names.empty()) {
    throw ConfigError("grouping needs at least one class on each coarse side");
  }
  const std::vector<std::string> native =
      raw.class_names.empty() ? dataset_class_names(spec.dataset) : raw.class_names;

  // native class index -> fine index
  std::vector<int> remap(native.size(), -1);
  const std::vector<std::string> wanted = spec.fine_class_names();
  for (std::size_t f = 0; f < wanted.size(); ++f) {
    const std::string key = canonical_class(spec.dataset, wanted[f]);
    auto it = std::find_if(native.begin(), native.end(), [&](const std::string& n) { return lower(n) == key; });
    if (it == native.end()) {
      throw ConfigError("unknown class '" + wanted[f] + "' for dataset '" + spec.dataset +
                        "'; valid names: " + join(native));
    }
    const auto idx = static_cast<std::size_t>(it - native.begin());
    if (remap[idx] >= 0) throw ConfigError("class '" + wanted[f] + "' listed more than once in the grouping");
    remap[idx] = static_cast<int>(f);
  }

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < raw.count(); ++i) {
    const std::uint8_t label = raw.labels[i];
    if (label < remap.size() && remap[label] >= 0) keep.push_back(i);
  }

  const int K = static_cast<int>(wanted.size());
  std::vector<int> c0(spec.c0_names.size());
  std::iota(c0.begin(), c0.end(), 0);
  std::vector<int> c1(spec.c1_names.size());
  std::iota(c1.begin(), c1.end(), static_cast<int>(spec.c0_names.size()));

  LabeledDataset data;
  data.hierarchy = Hierarchy(K, c0, c1);
  data.name = name.empty() ? spec.dataset : name;
  for (const auto& w : wanted) data.fine_names.push_back(canonical_class(spec.dataset, w));
  const std::size_t dim = raw.dim();
  data.features.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(dim));
  data.fine_labels.resize(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t src = keep[r];
    for (std::size_t j = 0; j < dim; ++j) {
      data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = normalize(raw.pixels[src * dim + j]);
    }
    data.fine_labels[r] = remap[raw.labels[src]];
  }
  return data;
}

std::vector<std::size_t> subsample_indices(const LabeledDataset& data, std::size_t n,
                                           std::uint64_t seed, bool stratified) {
  const std::size_t P = data.size();
  if (n > P) {
    throw DomainError("cannot draw " + std::to_string(n) + " samples from a dataset of " + std::to_string(P));
  }
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  if (!stratified) {
    chosen = rng.permutation(P);
    chosen.resize(n);
  } else {
    const auto K = static_cast<std::size_t>(data.K());
    std::vector<std::vector<std::size_t>> by_class(K);
    for (std::size_t i = 0; i < P; ++i) by_class[static_cast<std::size_t>(data.fine_labels[i])].push_back(i);

    // Largest-remainder apportionment of n over the class shares.
    std::vector<std::size_t> quota(K);
    std::vector<std::pair<std::size_t, std::size_t>> remainder;  // (remainder numerator, class)
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t num = n * by_class[k].size();
      quota[k] = num / P;
      assigned += quota[k];
      remainder.emplace_back(num % P, k);
    }
    std::stable_sort(remainder.begin(), remainder.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++quota[remainder[i].second];

    for (std::size_t k = 0; k < K; ++k) {
      rng.shuffle(std::span<std::size_t>(by_class[k]));
      chosen.insert(chosen.end(), by_class[k].begin(), by_class[k].begin() + static_cast<std::ptrdiff_t>(quota[k]));
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

LabeledDataset subsample(const LabeledDataset& data, std::size_t n, std::uint64_t seed, bool stratified) {
  const std::vector<std::size_t> rows = subsample_indices(data, n, seed, stratified);
  return data.subset(rows);
}

const std::vector<std::string>& dataset_class_names(const std::string& dataset) {
  static const std::map<std::string, std::vector<std::string>> names = {
      {"mnist", {"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"}},
      {"kmnist", {"o", "ki", "su", "tsu", "na", "ha", "ma", "ya", "re", "wo"}},
      {"fmnist",
       {"t-shirt/top", "trouser", "pullover", "dress", "coat", "sandal", "shirt", "sneaker", "bag",
        "ankle boot"}},
      {"cifar10",
       {"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"}},
  };
  auto it = names.find(dataset);
  if (it == names.end()) {
    throw ConfigError("unknown dataset '" + dataset + "' (expected mnist, kmnist, fmnist or cifar10)");
  }
  return it->second;
}

namespace {

const std::map<std::string, GroupingSpec>& presets() {
  static const std::map<std::string, GroupingSpec> table = {
      {"mnist_0to3_vs_4to8", {"mnist", {"0", "1", "2", "3"}, {"4", "5", "6", "7", "8"}}},
      {"mnist_even_vs_odd", {"mnist", {"0", "2", "4", "6"}, {"1", "3", "5", "7"}}},
      {"fmnist_default",
       {"fmnist", {"t-shirt/top", "sandal", "dress", "ankle boot"}, {"pullover", "sneaker", "shirt", "bag"}}},
      {"kmnist_default", {"kmnist", {"o", "ki", "su", "tsu"}, {"na", "ha", "ma", "ya"}}},
      {"cifar_vehicles_vs_animals",
       {"cifar10", {"airplane", "automobile", "ship", "truck"}, {"dog", "deer", "bird", "cat"}}},
      {"cifar_high_redundancy", {"cifar10", {"cat", "dog"}, {"automobile", "truck"}}},
      {"cifar_medium_redundancy", {"cifar10", {"cat", "dog"}, {"automobile", "deer"}}},
      {"cifar_low_redundancy", {"cifar10", {"cat", "truck"}, {"dog", "automobile"}}},
  };
  return table;
}

}  // namespace

std::optional<GroupingSpec> grouping_preset(const std::string& name) {
  auto it = presets().find(name);
  if (it == presets().end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> grouping_preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : presets()) out.push_back(k);
  return out;
}

GroupingSpec grouping_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("grouping document is not valid JSON: ") + e.what());
  }
  if (j.contains("preset")) {
    auto p = grouping_preset(j.at("preset").get<std::string>());
    if (!p) throw ConfigError("unknown grouping preset '" + j.at("preset").get<std::string>() + "'");
    return *p;
  }
  try {
    GroupingSpec g;
    g.dataset = j.at("dataset").get<std::string>();
    g.c0_names = j.at(j.contains("c0_names") ? "c0_names" : "c0").get<std::vector<std::string>>();
    g.c1_names = j.at(j.contains("c1_names") ? "c1_names" : "c1").get<std::vector<std::string>>();
    dataset_class_names(g.dataset);
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grouping document: ") + e.what());
  }
}

GroupingSpec resolve_grouping(const std::string& preset_or_path) {
  if (auto p = grouping_preset(preset_or_path)) return *p;
  const std::filesystem::path path(preset_or_path);
  if (!std::filesystem::exists(path)) {
    throw ConfigError("'" + preset_or_path + "' is neither a grouping preset (" +
                      join(grouping_preset_names()) + ") nor a readable file");
  }
  const auto bytes = read_file_bytes(path);
  return grouping_from_json_text(std::string(bytes.begin(), bytes.end()));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return bytes;
}

RawImageSet load_dataset(const std::string& dataset, const std::filesystem::path& dir, Split split) {
  const auto& names = dataset_class_names(dataset);
  auto locate = [&](const std::vector<std::filesystem::path>& candidates) {
    for (const auto& c : candidates) {
      if (std::filesystem::exists(c)) return c;
    }
    throw IoError("dataset file not found; looked for '" + candidates.front().string() + "'");
  };

  RawImageSet set;
  if (dataset == "cifar10") {
    std::vector<std::string> files;
    if (split == Split::Train) {
      for (int i = 1; i <= 5; ++i) files.push_back("data_batch_" + std::to_string(i) + ".bin");
    } else {
      files.push_back("test_batch.bin");
    }
    std::vector<std::vector<std::uint8_t>> batches;
    for (const auto& f : files) {
      batches.push_back(read_file_bytes(locate({dir / f, dir / "cifar-10-batches-bin" / f, dir / "cifar10" / f})));
    }
    set = parse_cifar10(batches);
  } else {
    const std::string prefix = split == Split::Train ? "train" : "t10k";
    const std::string img = prefix + "-images-idx3-ubyte";
    const std::string lbl = prefix + "-labels-idx1-ubyte";
    const auto img_bytes = read_file_bytes(locate({dir / img, dir / dataset / img}));
    const auto lbl_bytes = read_file_bytes(locate({dir / lbl, dir / dataset / lbl}));
    set = parse_idx(img_bytes, lbl_bytes);
  }
  set.class_names = names;
  return set;
}

}  // namespace granlab
