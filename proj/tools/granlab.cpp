// granlab: generate datasets, run fine-vs-coarse comparisons and sweeps, and
// plot sweep results.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "granlab/circles.hpp"
#include "granlab/data_real.hpp"
#include "granlab/dataset_io.hpp"
#include "granlab/errors.hpp"
#include "granlab/harness.hpp"
#include "granlab/harness_io.hpp"
#include "granlab/plot.hpp"
#include "granlab/rng.hpp"

namespace {

using namespace granlab;

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string default_data_dir() {
  const char* env = std::getenv("GRANLAB_DATA_DIR");
  return env ? env : "";
}

struct GenerateArgs {
  std::optional<int> circles;
  int n = 5000;
  double rho = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> jitter;
  double sector_offset = 0.0;
  std::string dataset;
  std::string grouping;
  std::string data_dir = default_data_dir();
  std::string split = "train";
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  if (a.circles.has_value() == !a.dataset.empty()) {
    throw UsageError("generate needs exactly one of --circles or --dataset");
  }
  if (a.circles) {
    CircleSpec spec;
    spec.K = *a.circles;
    spec.n_points = a.n;
    spec.redundancy = a.rho;
    spec.seed = a.seed;
    spec.radial_jitter = a.jitter;
    spec.sector_offset_per_circle = a.sector_offset;
    const LabeledDataset data = generate_circles(spec);
    save_dataset(data, a.out, spec);
    std::cout << "K=" << data.K() << " P=" << data.size() << " d=" << data.dim()
              << " redundancy=" << redundancy_of(data) << "\n";
    return 0;
  }
  if (a.grouping.empty()) throw UsageError("--dataset requires --grouping");
  if (a.data_dir.empty()) throw UsageError("--dataset requires --data-dir or GRANLAB_DATA_DIR");
  if (a.split != "train" && a.split != "test") throw UsageError("--split must be train or test");
  const GroupingSpec grouping = resolve_grouping(a.grouping);
  if (grouping.dataset != a.dataset) {
    throw UsageError("grouping '" + a.grouping + "' is for dataset '" + grouping.dataset + "'");
  }
  const RawImageSet raw = load_dataset(a.dataset, a.data_dir, a.split == "train" ? Split::Train : Split::Test);
  const LabeledDataset data = apply_grouping(raw, grouping, a.dataset);
  save_dataset(data, a.out);
  std::cout << "K=" << data.K() << " P=" << data.size() << " d=" << data.dim() << " redundancy=n/a\n";
  return 0;
}

struct RunArgs {
  std::string data;
  std::string test_data;
  int fine_hidden = 0;
  std::optional<int> coarse_hidden;
  bool match_capacity = false;
  int train_size = 0;
  int test_size = 10000;
  std::string optimizer = "sgd";
  std::uint64_t seed = 0;
  std::string out;
  std::optional<int> max_epochs;
  std::optional<int> patience;
  std::optional<int> batch_size;
  std::optional<double> lr_start;
  std::optional<double> lr_end;
  std::optional<double> beta;
  std::string activation = "relu";
  bool unstratified = false;
};

int cmd_run(const RunArgs& a) {
  if (a.coarse_hidden && a.match_capacity) throw UsageError("--coarse-hidden and --match-capacity are exclusive");
  LabeledDataset all = load_dataset_file(a.data);

  LabeledDataset pool;
  LabeledDataset test;
  if (!a.test_data.empty()) {
    pool = std::move(all);
    test = load_dataset_file(a.test_data);
  } else {
    // Hold out the test rows first, then draw training rows from the rest.
    if (static_cast<std::size_t>(a.train_size) >= all.size()) {
      throw UsageError("--train-size " + std::to_string(a.train_size) + " leaves no test rows in a dataset of " +
                       std::to_string(all.size()));
    }
    const std::size_t n_test = std::min<std::size_t>(static_cast<std::size_t>(a.test_size), all.size() - static_cast<std::size_t>(a.train_size));
    Rng rng(derive_seed(a.seed, 0xca4e));
    auto order = rng.permutation(all.size());
    std::vector<std::size_t> test_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> pool_rows(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(test_rows.begin(), test_rows.end());
    std::sort(pool_rows.begin(), pool_rows.end());
    test = all.subset(test_rows);
    pool = all.subset(pool_rows);
  }
  if (static_cast<std::size_t>(a.train_size) > pool.size()) {
    throw UsageError("--train-size " + std::to_string(a.train_size) + " exceeds the " + std::to_string(pool.size()) +
                     " available samples");
  }
  const LabeledDataset train = subsample(pool, static_cast<std::size_t>(a.train_size), derive_seed(a.seed, 11), !a.unstratified);

  ComparisonConfig cfg;
  cfg.fine_hidden = a.fine_hidden;
  cfg.coarse_hidden = a.coarse_hidden.value_or(match_capacity(a.fine_hidden, train.dim(), train.K()));
  cfg.activation = activation_from_string(a.activation);
  if (a.beta) cfg.fine_loss = LossKind::hybrid(*a.beta);
  TrainConfig& tc = cfg.train_config;
  if (optimizer_from_string(a.optimizer) == Optimizer::Adam) tc = TrainConfig::adam_defaults();
  tc.batch_size = a.batch_size.value_or(batch_size_for(a.train_size));
  if (a.max_epochs) tc.max_epochs = *a.max_epochs;
  if (a.patience) tc.early_stop_patience = *a.patience;
  if (a.lr_start) {
    tc.lr_start = *a.lr_start;
    if (!a.lr_end && tc.optimizer == Optimizer::Adam) tc.lr_end = *a.lr_start;
  }
  if (a.lr_end) tc.lr_end = *a.lr_end;
  tc.validate();

  const RunRecord rec = run_comparison(train, test, cfg, a.seed);
  std::printf("acc_fine=%.4f acc_coarse=%.4f delta=%+.4f epochs=%d/%d\n", rec.acc_fine_test, rec.acc_coarse_test,
              rec.delta(), rec.epochs_fine, rec.epochs_coarse);
  if (!a.out.empty()) {
    write_text_file(std::filesystem::path(a.out) / "run.json", run_record_to_json(rec));
    write_text_file(std::filesystem::path(a.out) / "train_config.json", train_config_to_json(tc));
  }
  return 0;
}

struct SweepArgs {
  std::string spec;
  std::string out = ".";
  std::string stem = "sweep";
  std::optional<int> threads;
};

int cmd_sweep(const SweepArgs& a) {
  ExperimentSpec spec = experiment_spec_from_json(read_text_file(a.spec));
  if (a.threads) spec.threads = *a.threads;
  const char* axis = to_string(spec.axis);
  const SweepResult result = sweep(spec, [axis](const SweepProgress& p) {
    const AggregatedPoint& pt = *p.point;
    std::printf("[%d/%d] %s=%g acc_fine=%.4f acc_coarse=%.4f delta=%+.4f ok=%d failed=%d\n", p.point_index + 1,
                p.points, axis, pt.axis_value, pt.acc_fine_mean, pt.acc_coarse_mean, pt.delta, pt.replicates,
                pt.failed);
    std::fflush(stdout);
  });
  persist(result, a.out, a.stem);
  std::cout << "wrote " << (std::filesystem::path(a.out) / (a.stem + ".csv")).string() << " and "
            << (std::filesystem::path(a.out) / (a.stem + ".json")).string() << "\n";
  if (has_failed_point(result)) {
    std::cerr << "error: every replicate failed for at least one point\n";
    return kRuntimeFailure;
  }
  return 0;
}

struct PlotArgs {
  std::string csv;
  std::string style;
  std::string out;
};

int cmd_plot(const PlotArgs& a) {
  const std::string text = read_text_file(a.csv);
  const std::vector<AggregatedPoint> points = points_from_csv(text);
  PlotSpec spec = a.style == "accuracy_vs_size" ? accuracy_vs_size_plot(points) : delta_vs_axis_plot(points);
  write_text_file(a.out, render_svg(spec));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"granlab: fine- vs coarse-grained training experiments"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a serialized dataset (synthetic circles or a grouped benchmark)");
  g->add_option("--circles", gen.circles, "Number of concentric circles K (even)");
  g->add_option("--n", gen.n, "Number of points")->check(CLI::PositiveNumber);
  g->add_option("--rho", gen.rho, "Boundary redundancy in [0, 1 - 2/K]");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--jitter", gen.jitter, "Radial jitter (default 0.02 * 2/K)");
  g->add_option("--sector-offset", gen.sector_offset, "Sector rotation per circle in radians");
  g->add_option("--dataset", gen.dataset, "mnist, kmnist, fmnist or cifar10")
      ->check(CLI::IsMember({"mnist", "kmnist", "fmnist", "cifar10"}));
  g->add_option("--grouping", gen.grouping, "Grouping preset name or JSON file");
  g->add_option("--data-dir", gen.data_dir, "Directory with the official dataset files (default $GRANLAB_DATA_DIR)");
  g->add_option("--split", gen.split, "train or test");
  g->add_option("--out", gen.out, "Output dataset file")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "Train a fine and a coarse model on the same data and compare them");
  r->add_option("--data", run.data, "Dataset file from `granlab generate`")->required();
  r->add_option("--test-data", run.test_data, "Separate test dataset file");
  r->add_option("--fine-hidden", run.fine_hidden, "Hidden neurons of the fine model")->required()->check(CLI::PositiveNumber);
  auto* ch = r->add_option("--coarse-hidden", run.coarse_hidden, "Hidden neurons of the coarse model")->check(CLI::PositiveNumber);
  auto* mc = r->add_flag("--match-capacity", run.match_capacity, "Match parameter counts (default)");
  ch->excludes(mc);
  r->add_option("--train-size", run.train_size, "Training set size")->required()->check(CLI::PositiveNumber);
  r->add_option("--test-size", run.test_size, "Held-out test size when --test-data is absent")->check(CLI::PositiveNumber);
  r->add_option("--optimizer", run.optimizer, "sgd or adam")->check(CLI::IsMember({"sgd", "adam"}));
  r->add_option("--seed", run.seed, "Run seed");
  r->add_option("--out", run.out, "Directory for run.json");
  r->add_option("--max-epochs", run.max_epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  r->add_option("--patience", run.patience, "Early-stopping patience (0 disables)")->check(CLI::NonNegativeNumber);
  r->add_option("--batch-size", run.batch_size, "Mini-batch size (default scales with train size)")->check(CLI::PositiveNumber);
  r->add_option("--lr-start", run.lr_start, "Initial learning rate");
  r->add_option("--lr-end", run.lr_end, "Final learning rate (SGD schedule)");
  r->add_option("--beta", run.beta, "Train the fine model on coarse + beta * intra-class loss");
  r->add_option("--activation", run.activation, "relu or tanh")->check(CLI::IsMember({"relu", "tanh"}));
  r->add_flag("--unstratified", run.unstratified, "Draw the training subsample without stratification");

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Run an experiment spec and write CSV + JSON archive");
  s->add_option("--spec", sw.spec, "Experiment spec JSON file")->required();
  s->add_option("--out", sw.out, "Output directory");
  s->add_option("--stem", sw.stem, "Output file stem");
  s->add_option("--threads", sw.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  PlotArgs pl;
  auto* p = app.add_subcommand("plot", "Render a sweep CSV as an SVG chart");
  p->add_option("--csv", pl.csv, "Sweep CSV")->required();
  p->add_option("--style", pl.style, "accuracy_vs_size or delta_vs_axis")
      ->required()
      ->check(CLI::IsMember({"accuracy_vs_size", "delta_vs_axis"}));
  p->add_option("--out", pl.out, "Output SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*g) return cmd_generate(gen);
    if (*r) return cmd_run(run);
    if (*s) return cmd_sweep(sw);
    if (*p) return cmd_plot(pl);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kUsageError;
}
