#include "granlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <tuple>
#include <thread>

#include "granlab/dataset_io.hpp"
#include "granlab/errors.hpp"
#include "granlab/rng.hpp"

namespace granlab {
namespace {

constexpr std::uint64_t kTestStream = 0x7e57;
constexpr std::uint64_t kCarveStream = 0xca4e;

std::vector<double> collect(std::span<const RunRecord> runs, double (*get)(const RunRecord&)) {
  std::vector<double> out;
  for (const auto& r : runs) {
    if (r.ok) out.push_back(get(r));
  }
  return out;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

// (low, high) of a series under the requested spread mode.
std::pair<double, double> spread_of(const std::vector<double>& v, SpreadMode mode) {
  if (v.size() < 2 && mode == SpreadMode::StandardError) return {v.front(), v.front()};
  const Summary s = aggregate(v, mode);
  return {s.low, s.high};
}

bool is_ordered_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

int as_size(double v, const char* what) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
    throw ConfigError(std::string(what) + " values must be positive integers");
  }
  return static_cast<int>(v);
}

// Training pool and fixed test set shared by every replicate.
struct SweepData {
  std::optional<LabeledDataset> pool;
  std::optional<LabeledDataset> test;
  int d = 0;
  int K = 0;
};

std::string resolve_data_dir(const RealSource& src) {
  if (!src.data_dir.empty()) return src.data_dir;
  if (const char* env = std::getenv("GRANLAB_DATA_DIR")) return env;
  throw ConfigError("no data directory: set data_dir in the spec or GRANLAB_DATA_DIR");
}

SweepData prepare_data(const ExperimentSpec& spec) {
  SweepData out;
  if (const auto* circles = std::get_if<CircleSpec>(&spec.source)) {
    out.d = 2;
    out.K = circles->K;
    CircleSpec test_spec = *circles;
    test_spec.n_points = spec.test_size;
    test_spec.seed = derive_seed(spec.seed, kTestStream);
    out.test = generate_circles(test_spec);
    return out;
  }
  if (const auto* real = std::get_if<RealSource>(&spec.source)) {
    const std::string dir = resolve_data_dir(*real);
    RawImageSet train_raw = load_dataset(real->dataset, dir, Split::Train);
    RawImageSet test_raw = load_dataset(real->dataset, dir, Split::Test);
    out.pool = apply_grouping(train_raw, real->grouping, real->dataset);
    LabeledDataset test_all = apply_grouping(test_raw, real->grouping, real->dataset);
    const std::size_t n_test = std::min<std::size_t>(static_cast<std::size_t>(spec.test_size), test_all.size());
    out.test = subsample(test_all, n_test, derive_seed(spec.seed, kTestStream), spec.stratified);
  } else {
    const auto& file = std::get<FileSource>(spec.source);
    LabeledDataset train_all = load_dataset_file(file.train_path);
    if (!file.test_path.empty()) {
      out.pool = std::move(train_all);
      out.test = load_dataset_file(file.test_path);
      if (out.test->hierarchy != out.pool->hierarchy) {
        throw ConfigError("train and test files use different hierarchies");
      }
    } else {
      if (static_cast<std::size_t>(spec.test_size) >= train_all.size()) {
        throw ConfigError("test_size must be smaller than the dataset when no test file is given");
      }
      Rng rng(derive_seed(spec.seed, kCarveStream));
      std::vector<std::size_t> order = rng.permutation(train_all.size());
      const auto cut = static_cast<std::ptrdiff_t>(spec.test_size);
      std::vector<std::size_t> test_rows(order.begin(), order.begin() + cut);
      std::vector<std::size_t> pool_rows(order.begin() + cut, order.end());
      std::sort(test_rows.begin(), test_rows.end());
      std::sort(pool_rows.begin(), pool_rows.end());
      out.test = train_all.subset(test_rows);
      out.pool = train_all.subset(pool_rows);
    }
  }
  out.d = out.pool->dim();
  out.K = out.pool->K();
  return out;
}

RunRecord run_replicate(const ExperimentSpec& spec, const SweepData& data, const SweepPointSetup& point,
                        int point_index, int replicate) {
  RunRecord rec;
  rec.axis_value = point.axis_value;
  rec.point_index = point_index;
  rec.replicate = replicate;
  rec.seed = replicate_seed(spec.seed, point_index, replicate);
  rec.fine_hidden = point.fine_hidden;
  rec.coarse_hidden = point.coarse_hidden;
  rec.p = point.train_size;
  rec.n_fine = parameter_count(data.d, point.fine_hidden, data.K);
  rec.n_coarse = parameter_count(data.d, point.coarse_hidden, 1);

  ComparisonConfig cfg;
  cfg.fine_hidden = point.fine_hidden;
  cfg.coarse_hidden = point.coarse_hidden;
  cfg.fine_loss = point.fine_loss;
  cfg.activation = spec.activation;
  cfg.train_config = spec.train_config;
  cfg.train_config.batch_size = spec.batch_size.value_or(batch_size_for(point.train_size));

  try {
    LabeledDataset train;
    LabeledDataset test;
    if (const auto* circles = std::get_if<CircleSpec>(&spec.source)) {
      CircleSpec s = *circles;
      s.redundancy = point.redundancy;
      s.n_points = point.train_size;
      s.seed = derive_seed(rec.seed, 11);
      train = generate_circles(s);
      // Same positions and coarse labels for every redundancy; only the
      // fine labels follow the point's redundancy.
      CircleSpec ts = s;
      ts.n_points = spec.test_size;
      ts.seed = derive_seed(spec.seed, kTestStream);
      test = generate_circles(ts);
    } else {
      train = subsample(*data.pool, static_cast<std::size_t>(point.train_size), derive_seed(rec.seed, 11),
                        spec.stratified);
      test = *data.test;
    }
    const RunRecord r = run_comparison(train, test, cfg, rec.seed);
    rec.acc_fine_test = r.acc_fine_test;
    rec.acc_coarse_test = r.acc_coarse_test;
    rec.acc_fine_train = r.acc_fine_train;
    rec.acc_coarse_train = r.acc_coarse_train;
    rec.loss_fine_stop = r.loss_fine_stop;
    rec.loss_coarse_stop = r.loss_coarse_stop;
    rec.epochs_fine = r.epochs_fine;
    rec.epochs_coarse = r.epochs_coarse;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::TrainSize: return "train_size";
    case SweepAxis::HiddenNeurons: return "hidden_neurons";
    case SweepAxis::Redundancy: return "redundancy";
    case SweepAxis::Beta: return "beta";
    case SweepAxis::ParamDataRatio: return "param_data_ratio";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  for (SweepAxis a : {SweepAxis::TrainSize, SweepAxis::HiddenNeurons, SweepAxis::Redundancy, SweepAxis::Beta,
                      SweepAxis::ParamDataRatio}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigError("unknown sweep axis '" + s +
                    "' (expected train_size, hidden_neurons, redundancy, beta or param_data_ratio)");
}

const char* to_string(SpreadMode m) { return m == SpreadMode::Quartiles ? "quartiles" : "standard_error"; }

SpreadMode spread_mode_from_string(const std::string& s) {
  if (s == "quartiles") return SpreadMode::Quartiles;
  if (s == "standard_error") return SpreadMode::StandardError;
  throw ConfigError("unknown spread mode '" + s + "' (expected quartiles or standard_error)");
}

void ExperimentSpec::validate() const {
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (values.empty()) throw ConfigError("sweep needs at least one axis value");
  if (!is_ordered_increasing(values)) throw ConfigError("axis values must be strictly increasing");
  if (train_size < 1 || test_size < 1) throw ConfigError("train_size and test_size must be positive");
  if (fine_hidden < 1) throw ConfigError("fine_hidden must be >= 1");
  if (coarse_hidden && *coarse_hidden < 1) throw ConfigError("coarse_hidden must be >= 1");
  if (batch_size && *batch_size < 1) throw ConfigError("batch_size must be >= 1");
  train_config.validate();
  if (const auto* c = std::get_if<CircleSpec>(&source)) c->validate();

  switch (axis) {
    case SweepAxis::TrainSize:
      for (double v : values) as_size(v, "train_size");
      break;
    case SweepAxis::HiddenNeurons:
      for (double v : values) as_size(v, "hidden_neurons");
      break;
    case SweepAxis::Redundancy: {
      const auto* c = std::get_if<CircleSpec>(&source);
      if (c == nullptr) throw ConfigError("the redundancy axis needs a circles data source");
      for (double v : values) {
        if (v < 0.0 || v > CircleSpec::max_redundancy(c->K)) {
          throw ConfigError("redundancy value outside [0, 1 - 2/K]");
        }
      }
      break;
    }
    case SweepAxis::Beta:
      for (double v : values) LossKind::hybrid(v);
      break;
    case SweepAxis::ParamDataRatio:
      for (double v : values) as_size(v, "train_size");
      if (hidden_values.empty()) throw ConfigError("the param_data_ratio axis needs hidden_values");
      for (int h : hidden_values) {
        if (h < 1) throw ConfigError("hidden_values must be positive");
      }
      break;
  }
}

RunRecord run_comparison(const LabeledDataset& train, const LabeledDataset& test, const ComparisonConfig& cfg,
                         std::uint64_t seed) {
  const int d = train.dim();
  const int K = train.K();
  if (test.dim() != d || test.hierarchy != train.hierarchy) {
    throw ConfigError("train and test sets disagree on dimension or hierarchy");
  }

  TrainConfig tc = cfg.train_config;
  tc.seed = derive_seed(seed, 3);
  MlpModel fine0 = glorot_init(d, cfg.fine_hidden, K, derive_seed(seed, 1), cfg.activation);
  MlpModel coarse0 = glorot_init(d, cfg.coarse_hidden, 1, derive_seed(seed, 2), cfg.activation);

  TrainedModel fine;
  TrainedModel coarse;
  try {
    fine = granlab::train(std::move(fine0), train, tc, cfg.fine_loss);
    coarse = granlab::train(std::move(coarse0), train, tc, LossKind::coarse());
  } catch (const DivergenceError& e) {
    throw DivergenceError("run seed " + std::to_string(seed) + ": " + e.message(), e.epoch());
  }

  RunRecord rec;
  rec.seed = seed;
  rec.fine_hidden = cfg.fine_hidden;
  rec.coarse_hidden = cfg.coarse_hidden;
  rec.n_fine = fine.model.parameter_count();
  rec.n_coarse = coarse.model.parameter_count();
  rec.p = static_cast<std::int64_t>(train.size());
  rec.acc_fine_test = model_coarse_accuracy(fine.model, test);
  rec.acc_coarse_test = model_coarse_accuracy(coarse.model, test);
  rec.acc_fine_train = model_coarse_accuracy(fine.model, train);
  rec.acc_coarse_train = model_coarse_accuracy(coarse.model, train);
  rec.loss_fine_stop = fine.log.best_validation_loss;
  rec.loss_coarse_stop = coarse.log.best_validation_loss;
  rec.epochs_fine = fine.log.epochs_run();
  rec.epochs_coarse = coarse.log.epochs_run();
  return rec;
}

int batch_size_for(std::int64_t train_size) {
  if (train_size <= 800) return 8;
  if (train_size <= 6400) return 16;
  return 32;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile of an empty list");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Summary aggregate(std::span<const double> values, SpreadMode mode) {
  if (values.empty()) throw DomainError("cannot aggregate an empty list");
  Summary s;
  if (mode == SpreadMode::Quartiles) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.center = quantile_sorted(sorted, 0.5);
    s.low = quantile_sorted(sorted, 0.25);
    s.high = quantile_sorted(sorted, 0.75);
    return s;
  }
  if (values.size() < 2) throw DomainError("standard error needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  s.center = mean;
  s.spread = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  s.low = mean - s.spread;
  s.high = mean + s.spread;
  return s;
}

AggregatedPoint aggregate_point(double axis_value, std::span<const RunRecord> runs, SpreadMode mode) {
  AggregatedPoint pt;
  pt.axis_value = axis_value;
  for (const auto& r : runs) {
    if (!r.ok) ++pt.failed;
  }
  const auto fine = collect(runs, [](const RunRecord& r) { return r.acc_fine_test; });
  const auto coarse = collect(runs, [](const RunRecord& r) { return r.acc_coarse_test; });
  const auto delta = collect(runs, [](const RunRecord& r) { return r.delta(); });
  const auto ratio = collect(runs, [](const RunRecord& r) { return r.n_over_p(); });
  pt.replicates = static_cast<int>(fine.size());
  if (fine.empty()) return pt;

  pt.acc_fine_mean = mean_of(fine);
  pt.acc_fine_median = median_of(fine);
  pt.acc_coarse_mean = mean_of(coarse);
  pt.acc_coarse_median = median_of(coarse);
  pt.delta = pt.acc_fine_mean - pt.acc_coarse_mean;
  pt.n_over_p = mean_of(ratio);
  std::tie(pt.spread_low, pt.spread_high) = spread_of(delta, mode);
  std::tie(pt.fine_low, pt.fine_high) = spread_of(fine, mode);
  std::tie(pt.coarse_low, pt.coarse_high) = spread_of(coarse, mode);
  return pt;
}

std::vector<SweepPointSetup> expand_points(const ExperimentSpec& spec, int input_dim, int K) {
  std::vector<SweepPointSetup> points;
  const double base_rho = std::holds_alternative<CircleSpec>(spec.source)
                              ? std::get<CircleSpec>(spec.source).redundancy
                              : 0.0;
  auto base = [&] {
    SweepPointSetup p;
    p.train_size = spec.train_size;
    p.fine_hidden = spec.fine_hidden;
    p.coarse_hidden = spec.coarse_hidden.value_or(match_capacity(spec.fine_hidden, input_dim, K));
    p.redundancy = base_rho;
    p.fine_loss = spec.fine_loss;
    return p;
  };
  for (double v : spec.values) {
    SweepPointSetup p = base();
    p.axis_value = v;
    switch (spec.axis) {
      case SweepAxis::TrainSize:
        p.train_size = as_size(v, "train_size");
        points.push_back(p);
        break;
      case SweepAxis::HiddenNeurons:
        p.fine_hidden = as_size(v, "hidden_neurons");
        p.coarse_hidden = match_capacity(p.fine_hidden, input_dim, K);
        points.push_back(p);
        break;
      case SweepAxis::Redundancy:
        p.redundancy = v;
        points.push_back(p);
        break;
      case SweepAxis::Beta:
        p.fine_loss = LossKind::hybrid(v);
        points.push_back(p);
        break;
      case SweepAxis::ParamDataRatio:
        p.train_size = as_size(v, "train_size");
        for (int h : spec.hidden_values) {
          SweepPointSetup q = p;
          q.fine_hidden = h;
          q.coarse_hidden = match_capacity(h, input_dim, K);
          q.axis_value = static_cast<double>(parameter_count(input_dim, h, K)) / q.train_size;
          points.push_back(q);
        }
        break;
    }
  }
  return points;
}

std::uint64_t replicate_seed(std::uint64_t spec_seed, int point_index, int replicate) {
  return derive_seed(derive_seed(spec_seed, static_cast<std::uint64_t>(point_index)),
                     static_cast<std::uint64_t>(replicate));
}

SweepResult sweep(const ExperimentSpec& spec, const std::function<void(const SweepProgress&)>& on_point) {
  spec.validate();
  const SweepData data = prepare_data(spec);
  const std::vector<SweepPointSetup> points = expand_points(spec, data.d, data.K);
  if (data.pool) {
    for (const auto& p : points) {
      if (static_cast<std::size_t>(p.train_size) > data.pool->size()) {
        throw ConfigError("train size " + std::to_string(p.train_size) + " exceeds the " +
                          std::to_string(data.pool->size()) + " available samples");
      }
    }
  }

  SweepResult result;
  result.spec = spec;
  result.records.resize(points.size() * static_cast<std::size_t>(spec.replicates));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned threads = std::min<unsigned>(spec.threads > 0 ? static_cast<unsigned>(spec.threads) : hw,
                                              static_cast<unsigned>(spec.replicates));

  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    const auto offset = pi * static_cast<std::size_t>(spec.replicates);
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int r = next++; r < spec.replicates; r = next++) {
        result.records[offset + static_cast<std::size_t>(r)] =
            run_replicate(spec, data, points[pi], static_cast<int>(pi), r);
      }
    };
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }

    const std::span<const RunRecord> runs(result.records.data() + offset, static_cast<std::size_t>(spec.replicates));
    result.points.push_back(aggregate_point(points[pi].axis_value, runs, spec.spread));
    if (on_point) on_point({static_cast<int>(pi), static_cast<int>(points.size()), &result.points.back()});
  }
  return result;
}

bool has_failed_point(const SweepResult& result) {
  return std::any_of(result.points.begin(), result.points.end(),
                     [](const AggregatedPoint& p) { return p.replicates == 0; });
}

}  // namespace granlab
