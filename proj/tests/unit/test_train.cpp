#include <cmath>
#include <vector>

#include "doctest.h"
#include "granlab/errors.hpp"
#include "granlab/metrics.hpp"
#include "granlab/train.hpp"
#include "oracles.hpp"

using namespace granlab;

namespace {

// 20 points: fine class 0 left of x = -0.5, class 1 right of x = +0.5.
LabeledDataset separable_toy() {
  LabeledDataset d;
  d.features.resize(20, 2);
  d.fine_labels.resize(20);
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    const int label = i % 2;
    d.features(i, 0) = label == 1 ? rng.uniform(0.5, 1.5) : rng.uniform(-1.5, -0.5);
    d.features(i, 1) = rng.uniform(-1.0, 1.0);
    d.fine_labels[static_cast<std::size_t>(i)] = label;
  }
  d.fine_names = {"left", "right"};
  return d;
}

// Four fine classes in quadrants, grouped by the sign of x.
LabeledDataset quadrant_data(int n, std::uint64_t seed) {
  LabeledDataset d;
  d.hierarchy = Hierarchy(4, {0, 1}, {2, 3});
  d.features.resize(n, 2);
  d.fine_labels.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
    d.features(i, 0) = x;
    d.features(i, 1) = y;
    d.fine_labels[static_cast<std::size_t>(i)] = (x > 0 ? 0 : 2) + (y > 0 ? 0 : 1);
  }
  d.fine_names = {"a", "b", "c", "d"};
  return d;
}

}  // namespace

TEST_CASE("coarse accuracy convention") {
  CHECK(coarse_accuracy(std::vector<double>{0.7, 0.2}, std::vector<int>{1, 0}) == 1.0);
  CHECK(coarse_accuracy(std::vector<double>{0.5}, std::vector<int>{1}) == 1.0);
  CHECK(coarse_accuracy(std::vector<double>{0.5}, std::vector<int>{0}) == 0.0);
  CHECK(coarse_accuracy(std::vector<double>{0.4, 0.6, 0.9}, std::vector<int>{1, 1, 0}) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(coarse_accuracy(std::vector<double>{}, std::vector<int>{}), DomainError);
  CHECK_THROWS_AS(coarse_accuracy(std::vector<double>{0.1}, std::vector<int>{0, 1}), ShapeError);
}

TEST_CASE("config validation and defaults") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  const TrainConfig adam = TrainConfig::adam_defaults();
  CHECK(adam.optimizer == Optimizer::Adam);
  CHECK(adam.lr_start == 0.001);
  CHECK(adam.adam_beta1 == 0.9);
  CHECK(adam.adam_beta2 == 0.999);
  CHECK(adam.adam_epsilon == 1e-7);

  TrainConfig bad = cfg;
  bad.lr_end = 0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.adam_beta2 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.validation_fraction = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(optimizer_from_string("rmsprop"), ConfigError);
}

TEST_CASE("linear learning rate schedule") {
  TrainConfig cfg;
  cfg.max_epochs = 10;
  CHECK(scheduled_learning_rate(cfg, 0) == 0.01);
  CHECK(scheduled_learning_rate(cfg, 9) == doctest::Approx(0.001).epsilon(1e-15));
  for (int e = 0; e < 10; ++e) {
    CHECK(scheduled_learning_rate(cfg, e) == doctest::Approx(0.01 - 0.009 * e / 9.0).epsilon(1e-14));
  }
}

TEST_CASE("separable toy is fit exactly") {
  const LabeledDataset data = separable_toy();
  TrainConfig cfg;
  cfg.max_epochs = 200;
  cfg.batch_size = 4;
  cfg.lr_start = 0.1;
  cfg.lr_end = 0.01;
  cfg.validation_fraction = 0.0;
  cfg.early_stop_patience = 0;
  cfg.seed = 3;

  const TrainedModel fine = train(glorot_init(2, 8, 2, 1), data, cfg, LossKind::fine());
  CHECK(model_coarse_accuracy(fine.model, data) == 1.0);
  CHECK(fine.log.epochs_run() == 200);

  const TrainedModel coarse = train(glorot_init(2, 8, 1, 1), data, cfg, LossKind::coarse());
  CHECK(model_coarse_accuracy(coarse.model, data) == 1.0);

  const TrainedModel adam = train(glorot_init(2, 8, 2, 1), data, TrainConfig::adam_defaults(), LossKind::fine());
  CHECK(adam.log.epochs_run() >= 1);
}

TEST_CASE("patience zero runs every epoch and restores the best") {
  const LabeledDataset data = quadrant_data(60, 2);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.early_stop_patience = 0;
  cfg.validation_fraction = 0.2;
  cfg.seed = 9;
  const TrainedModel t = train(glorot_init(2, 6, 4, 4), data, cfg, LossKind::fine());
  REQUIRE(t.log.epochs_run() == 5);
  CHECK_FALSE(t.log.stopped_early);
  double best = 1e300;
  for (const auto& e : t.log.epochs) best = std::min(best, e.validation_loss);
  CHECK(t.log.best_validation_loss == best);
  CHECK(t.log.epochs[static_cast<std::size_t>(t.log.best_epoch)].validation_loss == best);
}

TEST_CASE("early stopping halts and never returns a worse model") {
  // Tiny noisy set with a large network overfits quickly.
  LabeledDataset data = quadrant_data(40, 5);
  Rng rng(1);
  for (auto& y : data.fine_labels) {
    if (rng.uniform() < 0.3) y = static_cast<int>(rng.below(4));
  }
  TrainConfig cfg = TrainConfig::adam_defaults();
  cfg.lr_start = cfg.lr_end = 0.05;
  cfg.max_epochs = 400;
  cfg.early_stop_patience = 5;
  cfg.validation_fraction = 0.25;
  cfg.batch_size = 4;
  cfg.seed = 1;
  const TrainedModel t = train(glorot_init(2, 64, 4, 2), data, cfg, LossKind::fine());
  CHECK(t.log.stopped_early);
  CHECK(t.log.epochs_run() < 400);
  CHECK(t.log.epochs_run() - 1 - t.log.best_epoch == 5);
  for (const auto& e : t.log.epochs) CHECK(t.log.best_validation_loss <= e.validation_loss);
}

TEST_CASE("training is bit-reproducible") {
  const LabeledDataset data = quadrant_data(80, 7);
  TrainConfig cfg;
  cfg.max_epochs = 15;
  cfg.seed = 42;
  for (LossKind kind : {LossKind::fine(), LossKind::intra(), LossKind::hybrid(0.3)}) {
    const TrainedModel a = train(glorot_init(2, 5, 4, 11), data, cfg, kind);
    const TrainedModel b = train(glorot_init(2, 5, 4, 11), data, cfg, kind);
    CHECK(a.model == b.model);
    CHECK(a.log.epochs_run() == b.log.epochs_run());
  }
  cfg.seed = 43;
  const TrainedModel c = train(glorot_init(2, 5, 4, 11), data, cfg, LossKind::fine());
  const TrainedModel d = train(glorot_init(2, 5, 4, 11), data, TrainConfig{.seed = 42, }, LossKind::fine());
  CHECK_FALSE(c.model == d.model);
}

TEST_CASE("divergence is reported with the epoch") {
  const LabeledDataset data = quadrant_data(40, 3);
  TrainConfig cfg;
  cfg.lr_start = cfg.lr_end = 1e300;
  cfg.max_epochs = 10;
  try {
    train(glorot_init(2, 5, 4, 1), data, cfg, LossKind::fine());
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch() >= 0);
    CHECK(e.epoch() < 10);
  }
}

TEST_CASE("training argument checks") {
  const LabeledDataset data = quadrant_data(20, 1);
  TrainConfig cfg;
  cfg.max_epochs = 1;
  CHECK_THROWS_AS(train(glorot_init(2, 3, 1, 0), data, cfg, LossKind::fine()), ConfigError);
  CHECK_THROWS_AS(train(glorot_init(2, 3, 3, 0), data, cfg, LossKind::fine()), ConfigError);
  CHECK_THROWS_AS(train(glorot_init(3, 3, 4, 0), data, cfg, LossKind::fine()), ShapeError);
}
