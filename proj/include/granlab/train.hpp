#pragma once

#include <cstdint>
#include <vector>

#include "granlab/dataset.hpp"
#include "granlab/losses.hpp"
#include "granlab/mlp.hpp"

namespace granlab {

enum class Optimizer { Sgd, Adam };

const char* to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
  Optimizer optimizer = Optimizer::Sgd;
  double lr_start = 0.01;
  double lr_end = 0.001;
  int max_epochs = 200;
  int batch_size = 16;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-7;
  // Epochs without validation improvement before stopping; 0 disables the
  // stop (all max_epochs run) while still restoring the best parameters.
  int early_stop_patience = 20;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  // Throws ConfigError on any invalid field.
  void validate() const;

  static TrainConfig adam_defaults();
};

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double train_coarse_accuracy = 0.0;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  double best_validation_loss = 0.0;
  bool stopped_early = false;

  int epochs_run() const { return static_cast<int>(epochs.size()); }
};

struct TrainedModel {
  MlpModel model;
  TrainingLog log;
};

// Learning rate used by SGD in the given epoch: linear from lr_start (first
// epoch) to lr_end (epoch max_epochs - 1).
double scheduled_learning_rate(const TrainConfig& cfg, int epoch);

// Mini-batch training with a seeded validation split, per-epoch reshuffling
// and best-validation restore. A sigmoid-head model is trained on the coarse
// labels and only accepts LossKind::Coarse. Throws DivergenceError if a loss
// becomes non-finite.
TrainedModel train(MlpModel model, const LabeledDataset& data, const TrainConfig& cfg,
                   LossKind loss);

// Fraction of rows whose thresholded coarse prediction matches the coarse
// label, for either head type.
double model_coarse_accuracy(const MlpModel& model, const LabeledDataset& data);

}  // namespace granlab
