#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "granlab/errors.hpp"
#include "granlab/harness.hpp"
#include "oracles.hpp"

using namespace granlab;

namespace {

// Four quadrant classes grouped by the sign of x, with a margin around x = 0.
LabeledDataset margin_quadrants(int n, std::uint64_t seed) {
  LabeledDataset d;
  d.hierarchy = Hierarchy(4, {0, 1}, {2, 3});
  d.features.resize(n, 2);
  d.fine_labels.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double sx = i % 2 ? 1.0 : -1.0;
    const double x = sx * rng.uniform(0.3, 1.0), y = rng.uniform(-1.0, 1.0);
    d.features(i, 0) = x;
    d.features(i, 1) = y;
    d.fine_labels[static_cast<std::size_t>(i)] = (x > 0 ? 0 : 2) + (y > 0 ? 0 : 1);
  }
  d.fine_names = {"a", "b", "c", "d"};
  return d;
}

ExperimentSpec small_circle_spec() {
  ExperimentSpec spec;
  CircleSpec c;
  c.K = 4;
  spec.source = c;
  spec.axis = SweepAxis::Redundancy;
  spec.values = {0.0, 0.5};
  spec.fine_hidden = 6;
  spec.coarse_hidden = 8;
  spec.train_size = 120;
  spec.test_size = 200;
  spec.replicates = 3;
  spec.train_config = TrainConfig::adam_defaults();
  spec.train_config.max_epochs = 5;
  spec.seed = 77;
  spec.threads = 1;
  return spec;
}

}  // namespace

TEST_CASE("aggregate examples") {
  const std::vector<double> v{1, 2, 3, 4};
  const Summary q = aggregate(v, SpreadMode::Quartiles);
  CHECK(q.center == 2.5);
  CHECK(q.low == 1.75);
  CHECK(q.high == 3.25);

  const std::vector<double> c(7, 0.625);
  const Summary qc = aggregate(c, SpreadMode::Quartiles);
  CHECK(qc.center == 0.625);
  CHECK(qc.low == 0.625);
  CHECK(qc.high == 0.625);
  CHECK(aggregate(c, SpreadMode::StandardError).spread == 0.0);

  const Summary se = aggregate(std::vector<double>{0, 1}, SpreadMode::StandardError);
  CHECK(se.center == 0.5);
  CHECK(se.spread == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(aggregate(std::vector<double>{1.0}, SpreadMode::StandardError), DomainError);
  CHECK_THROWS_AS(aggregate(std::vector<double>{}, SpreadMode::Quartiles), DomainError);
  CHECK(aggregate(std::vector<double>{3.0}, SpreadMode::Quartiles).center == 3.0);
}

TEST_CASE("aggregate agrees with brute-force references") {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(40));
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = trial % 3 == 0 ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
    const Summary q = aggregate(v, SpreadMode::Quartiles);
    CHECK(std::abs(q.center - oracle::brute_quantile(v, 0.5)) <= 1e-12);
    CHECK(std::abs(q.low - oracle::brute_quantile(v, 0.25)) <= 1e-12);
    CHECK(std::abs(q.high - oracle::brute_quantile(v, 0.75)) <= 1e-12);
    const auto [mean, se] = oracle::brute_mean_se(v);
    const Summary s = aggregate(v, SpreadMode::StandardError);
    CHECK(std::abs(s.center - mean) <= 1e-12);
    CHECK(std::abs(s.spread - se) <= 1e-12);
  }
}

TEST_CASE("batch size rule") {
  CHECK(batch_size_for(400) == 8);
  CHECK(batch_size_for(800) == 8);
  CHECK(batch_size_for(801) == 16);
  CHECK(batch_size_for(3200) == 16);
  CHECK(batch_size_for(6401) == 32);
  CHECK(batch_size_for(25600) == 32);
  int prev = 0;
  for (int n = 1; n <= 30000; n += 97) {
    CHECK(batch_size_for(n) >= prev);
    prev = batch_size_for(n);
  }
}

TEST_CASE("comparison on a separable coarse task") {
  const LabeledDataset train = margin_quadrants(200, 1);
  const LabeledDataset test = margin_quadrants(400, 2);
  ComparisonConfig cfg;
  cfg.fine_hidden = 16;
  cfg.coarse_hidden = 16;
  cfg.train_config = TrainConfig::adam_defaults();
  cfg.train_config.lr_start = cfg.train_config.lr_end = 0.01;
  cfg.train_config.max_epochs = 100;
  cfg.train_config.batch_size = 8;
  const RunRecord r = run_comparison(train, test, cfg, 5);
  CHECK(r.acc_fine_test == 1.0);
  CHECK(r.acc_coarse_test == 1.0);
  CHECK(r.delta() == 0.0);
  CHECK(r.p == 200);
  CHECK(r.n_fine == 16 * 3 + 4 * 17);
  CHECK(r.n_coarse == 16 * 3 + 17);
  CHECK(r.n_over_p() == static_cast<double>(16 * 3 + 4 * 17) / 200.0);
  CHECK(run_comparison(train, test, cfg, 5) == r);
}

TEST_CASE("comparison rejects mismatched splits") {
  const LabeledDataset train = margin_quadrants(20, 1);
  LabeledDataset test = margin_quadrants(20, 2);
  test.hierarchy = Hierarchy(4, {0, 2}, {1, 3});
  CHECK_THROWS_AS(run_comparison(train, test, ComparisonConfig{}, 1), ConfigError);
}

TEST_CASE("replicate seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (int p = 0; p < 20; ++p) {
    for (int r = 0; r < 30; ++r) seen.insert(replicate_seed(1, p, r));
  }
  CHECK(seen.size() == 600);
  CHECK(replicate_seed(1, 0, 0) != replicate_seed(2, 0, 0));
}

TEST_CASE("sweep point expansion") {
  ExperimentSpec spec;
  spec.axis = SweepAxis::ParamDataRatio;
  spec.values = {100, 200};
  spec.hidden_values = {5, 10};
  const auto pts = expand_points(spec, 2, 8);
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].axis_value == static_cast<double>(5 * 3 + 8 * 6) / 100.0);
  CHECK(pts[3].axis_value == static_cast<double>(10 * 3 + 8 * 11) / 200.0);
  CHECK(pts[1].coarse_hidden == match_capacity(10, 2, 8));

  spec.axis = SweepAxis::Beta;
  spec.values = {0.0, 0.5, 1.0};
  const auto beta = expand_points(spec, 2, 8);
  CHECK(beta[1].fine_loss == LossKind::hybrid(0.5));

  spec.axis = SweepAxis::HiddenNeurons;
  spec.values = {4, 8};
  spec.coarse_hidden = 150;
  CHECK(expand_points(spec, 2, 8)[1].coarse_hidden == match_capacity(8, 2, 8));
  spec.axis = SweepAxis::TrainSize;
  CHECK(expand_points(spec, 2, 8)[0].coarse_hidden == 150);
}

TEST_CASE("spec validation") {
  ExperimentSpec spec = small_circle_spec();
  CHECK_NOTHROW(spec.validate());
  spec.values = {0.5, 0.0};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.values = {0.0, 0.6};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = small_circle_spec();
  spec.replicates = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = small_circle_spec();
  spec.axis = SweepAxis::TrainSize;
  spec.values = {100.5};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.axis = SweepAxis::Beta;
  spec.values = {0.5, 2.0};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.axis = SweepAxis::Redundancy;
  spec.values = {0.0};
  spec.source = FileSource{"x.json", ""};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("sweep is deterministic and thread-count independent") {
  ExperimentSpec spec = small_circle_spec();
  int calls = 0;
  const SweepResult a = sweep(spec, [&](const SweepProgress& p) {
    CHECK(p.points == 2);
    CHECK(p.point_index == calls);
    ++calls;
  });
  CHECK(calls == 2);
  spec.threads = 3;
  const SweepResult b = sweep(spec);
  REQUIRE(a.records.size() == 6);
  CHECK(a.records == b.records);
  CHECK(a.points == b.points);

  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& r = a.records[i];
    CHECK(r.ok);
    CHECK(r.point_index == static_cast<int>(i / 3));
    CHECK(r.replicate == static_cast<int>(i % 3));
    CHECK(r.coarse_hidden == 8);
    CHECK(r.acc_fine_test >= 0.0);
    CHECK(r.acc_fine_test <= 1.0);
    CHECK(r.acc_coarse_train >= 0.0);
    CHECK(r.acc_coarse_train <= 1.0);
    seeds.insert(r.seed);
  }
  CHECK(seeds.size() == 6);

  for (std::size_t p = 0; p < a.points.size(); ++p) {
    double mean_delta = 0.0;
    for (int r = 0; r < 3; ++r) mean_delta += a.records[p * 3 + static_cast<std::size_t>(r)].delta() / 3.0;
    CHECK(std::abs(a.points[p].delta - mean_delta) <= 1e-12);
    CHECK(a.points[p].replicates == 3);
    CHECK(a.points[p].failed == 0);
    CHECK(a.points[p].n_over_p == static_cast<double>(6 * 3 + 4 * 7) / 120.0);
  }
  CHECK_FALSE(has_failed_point(a));
}

TEST_CASE("failed replicates are recorded, not fatal") {
  ExperimentSpec spec = small_circle_spec();
  spec.values = {0.0};
  spec.train_config = TrainConfig{};
  spec.train_config.lr_start = spec.train_config.lr_end = 1e300;
  spec.train_config.max_epochs = 3;
  const SweepResult r = sweep(spec);
  CHECK(has_failed_point(r));
  CHECK(r.points[0].failed == 3);
  CHECK(r.points[0].replicates == 0);
  for (const auto& rec : r.records) {
    CHECK_FALSE(rec.ok);
    CHECK(rec.error.find("seed") != std::string::npos);
  }
}

TEST_CASE("aggregation skips failed runs") {
  std::vector<RunRecord> runs(4);
  for (int i = 0; i < 4; ++i) {
    runs[static_cast<std::size_t>(i)].acc_fine_test = 0.5 + 0.1 * i;
    runs[static_cast<std::size_t>(i)].acc_coarse_test = 0.6;
    runs[static_cast<std::size_t>(i)].n_fine = 10;
    runs[static_cast<std::size_t>(i)].p = 5;
  }
  runs[3].ok = false;
  const AggregatedPoint p = aggregate_point(1.0, runs, SpreadMode::StandardError);
  CHECK(p.replicates == 3);
  CHECK(p.failed == 1);
  CHECK(p.acc_fine_mean == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(p.acc_fine_median == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(std::abs(p.delta) < 1e-14);
  CHECK(p.n_over_p == 2.0);
  CHECK(p.spread_low < p.delta);
  CHECK(p.spread_high > p.delta);
}
