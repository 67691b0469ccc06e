#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "granlab/circles.hpp"
#include "granlab/data_real.hpp"
#include "granlab/dataset.hpp"
#include "granlab/metrics.hpp"
#include "granlab/mlp.hpp"
#include "granlab/train.hpp"

namespace granlab {

enum class SweepAxis { TrainSize, HiddenNeurons, Redundancy, Beta, ParamDataRatio };
enum class SpreadMode { Quartiles, StandardError };

const char* to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);
const char* to_string(SpreadMode m);
SpreadMode spread_mode_from_string(const std::string& s);

// Official dataset files plus a grouping.
struct RealSource {
  std::string dataset;
  GroupingSpec grouping;
  std::string data_dir;  // empty: GRANLAB_DATA_DIR
};

// Serialized datasets produced by `granlab generate`. Without a test file the
// test set is carved out of the training file before subsampling.
struct FileSource {
  std::string train_path;
  std::string test_path;
};

using DataSource = std::variant<CircleSpec, RealSource, FileSource>;

struct ExperimentSpec {
  std::string name = "sweep";
  DataSource source = CircleSpec{};
  SweepAxis axis = SweepAxis::TrainSize;
  std::vector<double> values;
  // Fine widths crossed with `values` (train sizes) on the param_data_ratio axis.
  std::vector<int> hidden_values;
  int fine_hidden = 10;
  // Fixed coarse width; when absent (or when the axis varies the width) it is
  // derived with match_capacity.
  std::optional<int> coarse_hidden;
  int train_size = 1000;
  int test_size = 10000;
  int replicates = 30;
  TrainConfig train_config;
  std::optional<int> batch_size;  // absent: batch_size_for(train size)
  LossKind fine_loss = LossKind::fine();
  Activation activation = Activation::Relu;
  bool stratified = true;
  SpreadMode spread = SpreadMode::Quartiles;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency

  // Throws ConfigError on invalid combinations.
  void validate() const;
};

// One comparison: fine model vs coarse model on identical data.
struct ComparisonConfig {
  int fine_hidden = 10;
  int coarse_hidden = 10;
  TrainConfig train_config;
  LossKind fine_loss = LossKind::fine();
  Activation activation = Activation::Relu;
};

struct RunRecord {
  double axis_value = 0.0;
  int point_index = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;

  double acc_fine_test = 0.0;
  double acc_coarse_test = 0.0;
  double acc_fine_train = 0.0;
  double acc_coarse_train = 0.0;
  double loss_fine_stop = 0.0;    // best validation loss of the fine model
  double loss_coarse_stop = 0.0;  // best validation loss of the coarse model
  int epochs_fine = 0;
  int epochs_coarse = 0;
  int fine_hidden = 0;
  int coarse_hidden = 0;
  std::int64_t n_fine = 0;
  std::int64_t n_coarse = 0;
  std::int64_t p = 0;

  double delta() const { return acc_fine_test - acc_coarse_test; }
  double n_over_p() const { return static_cast<double>(n_fine) / static_cast<double>(p); }

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// Trains a fine model (softmax head, `cfg.fine_loss`) and a coarse model
// (sigmoid head, coarse BCE) on `train`, and scores both on the coarse task.
// Both models share the validation split and shuffling stream; their
// initializations are derived from `seed`. Divergence is rethrown with the
// run's seed attached.
RunRecord run_comparison(const LabeledDataset& train, const LabeledDataset& test,
                         const ComparisonConfig& cfg, std::uint64_t seed);

// 8 up to 800 samples, 16 up to 6400, 32 above.
int batch_size_for(std::int64_t train_size);

struct Summary {
  double center = 0.0;  // median or mean
  double low = 0.0;     // Q1 or mean - SE
  double high = 0.0;    // Q3 or mean + SE
  double spread = 0.0;  // SE (standard_error mode only)
};

// quartiles: (median, Q1, Q3) by linear interpolation between order
// statistics. standard_error: (mean, s / sqrt(R)) with the R-1 sample
// deviation. Throws DomainError on an empty list, or on a single value in
// standard_error mode.
Summary aggregate(std::span<const double> values, SpreadMode mode);

// Linear-interpolation quantile of sorted data (q in [0, 1]).
double quantile_sorted(std::span<const double> sorted, double q);

struct AggregatedPoint {
  double axis_value = 0.0;
  double acc_fine_mean = 0.0;
  double acc_fine_median = 0.0;
  double acc_coarse_mean = 0.0;
  double acc_coarse_median = 0.0;
  double delta = 0.0;  // mean(acc_fine) - mean(acc_coarse)
  double spread_low = 0.0;
  double spread_high = 0.0;
  double n_over_p = 0.0;
  int replicates = 0;  // successful runs
  double fine_low = 0.0;
  double fine_high = 0.0;
  double coarse_low = 0.0;
  double coarse_high = 0.0;
  int failed = 0;

  friend bool operator==(const AggregatedPoint&, const AggregatedPoint&) = default;
};

// Aggregates the successful runs of one point. Delta spread uses the per-run
// deltas; with fewer than two runs in standard_error mode the spread collapses
// to the center.
AggregatedPoint aggregate_point(double axis_value, std::span<const RunRecord> runs,
                                SpreadMode mode);

struct SweepPointSetup {
  double axis_value = 0.0;
  int train_size = 0;
  int fine_hidden = 0;
  int coarse_hidden = 0;
  double redundancy = 0.0;
  LossKind fine_loss;
};

// Expands the spec into its sweep points; `input_dim` and `K` are needed for
// capacity matching.
std::vector<SweepPointSetup> expand_points(const ExperimentSpec& spec, int input_dim, int K);

std::uint64_t replicate_seed(std::uint64_t spec_seed, int point_index, int replicate);

struct SweepResult {
  ExperimentSpec spec;
  std::vector<RunRecord> records;  // ordered by (point, replicate)
  std::vector<AggregatedPoint> points;
};

struct SweepProgress {
  int point_index = 0;
  int points = 0;
  const AggregatedPoint* point = nullptr;
};

// Runs every replicate of every point. Replicate failures are recorded in
// their RunRecord and excluded from aggregation.
SweepResult sweep(const ExperimentSpec& spec,
                  const std::function<void(const SweepProgress&)>& on_point = {});

// True if some point has no successful replicate.
bool has_failed_point(const SweepResult& result);

}  // namespace granlab
