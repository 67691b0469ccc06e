#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "granlab/dataset.hpp"

namespace granlab {

// Images as raw bytes plus their class index (0..9).
struct RawImageSet {
  int rows = 0;
  int cols = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;  // count * dim() bytes
  std::vector<std::uint8_t> labels;
  std::vector<std::string> class_names;  // filled by dataset loaders

  std::size_t count() const { return labels.size(); }
  std::size_t dim() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) *
           static_cast<std::size_t>(channels);
  }
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 3073;

// Parses an IDX image file and its label file. Throws ParseError (with byte
// offset) on a bad magic number, truncated payload, or count mismatch.
RawImageSet parse_idx(std::span<const std::uint8_t> image_file,
                      std::span<const std::uint8_t> label_file);

// Parses one or more CIFAR-10 binary batches (label byte + 3072 pixel bytes,
// channel-planar).
RawImageSet parse_cifar10(std::span<const std::vector<std::uint8_t>> batch_files);

std::vector<std::uint8_t> serialize_idx_images(const RawImageSet& set);
std::vector<std::uint8_t> serialize_idx_labels(const RawImageSet& set);
std::vector<std::uint8_t> serialize_cifar10(const RawImageSet& set);

// byte / 255.
inline double normalize(std::uint8_t byte) { return static_cast<double>(byte) / 255.0; }
Matrix normalize(std::span<const std::uint8_t> pixels, std::size_t count, std::size_t dim);

struct GroupingSpec {
  std::string dataset;
  std::vector<std::string> c0_names;
  std::vector<std::string> c1_names;

  // c0 names followed by c1 names; defines fine-label order.
  std::vector<std::string> fine_class_names() const;
};

// Keeps samples of the listed classes, re-indexes them in grouping order, and
// builds the hierarchy. Throws ConfigError on unknown or duplicate names.
LabeledDataset apply_grouping(const RawImageSet& raw, const GroupingSpec& spec,
                              const std::string& name = {});

// Seeded draw of n rows without replacement. When stratified, each fine class
// gets floor(n * share) rows and leftover slots go to the classes with the
// largest remainders. Throws DomainError if n > P.
LabeledDataset subsample(const LabeledDataset& data, std::size_t n, std::uint64_t seed,
                         bool stratified = true);
std::vector<std::size_t> subsample_indices(const LabeledDataset& data, std::size_t n,
                                           std::uint64_t seed, bool stratified = true);

// Known datasets: mnist, kmnist, fmnist, cifar10.
const std::vector<std::string>& dataset_class_names(const std::string& dataset);

// Built-in groupings: mnist_0to3_vs_4to8, mnist_even_vs_odd, fmnist_default,
// kmnist_default, cifar_vehicles_vs_animals, cifar_high_redundancy,
// cifar_medium_redundancy, cifar_low_redundancy.
std::optional<GroupingSpec> grouping_preset(const std::string& name);
std::vector<std::string> grouping_preset_names();

// Reads a grouping document: {"dataset": ..., "c0": [...], "c1": [...]}.
GroupingSpec grouping_from_json_text(const std::string& text);
// Accepts a preset name or a path to a grouping document.
GroupingSpec resolve_grouping(const std::string& preset_or_path);

enum class Split { Train, Test };

// Loads the official files of a dataset from `dir` (uncompressed):
//   mnist/kmnist/fmnist: {train,t10k}-{images-idx3,labels-idx1}-ubyte
//   cifar10: data_batch_{1..5}.bin, test_batch.bin (optionally under
//   cifar-10-batches-bin/).
RawImageSet load_dataset(const std::string& dataset, const std::filesystem::path& dir, Split split);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace granlab
