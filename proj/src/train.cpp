#include "granlab/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "granlab/errors.hpp"
#include "granlab/metrics.hpp"
#include "granlab/rng.hpp"

namespace granlab {
namespace {

struct AdamState {
  Gradients m;
  Gradients v;
  long step = 0;

  explicit AdamState(const MlpModel& model) {
    for (Gradients* g : {&m, &v}) {
      g->hidden_weights = Matrix::Zero(model.hidden_weights.rows(), model.hidden_weights.cols());
      g->hidden_biases = Vector::Zero(model.hidden_biases.size());
      g->output_weights = Matrix::Zero(model.output_weights.rows(), model.output_weights.cols());
      g->output_biases = Vector::Zero(model.output_biases.size());
    }
  }
};

template <typename Param, typename Grad>
void adam_update(Param& param, const Grad& grad, Param& m, Param& v, double lr, double b1,
                 double b2, double eps, double c1, double c2) {
  m = b1 * m + (1.0 - b1) * grad;
  v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

void apply_adam(MlpModel& model, const Gradients& g, AdamState& s, const TrainConfig& cfg) {
  ++s.step;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(s.step));
  const double lr = cfg.lr_start;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double eps = cfg.adam_epsilon;
  adam_update(model.hidden_weights, g.hidden_weights, s.m.hidden_weights, s.v.hidden_weights, lr, b1, b2, eps, c1, c2);
  adam_update(model.hidden_biases, g.hidden_biases, s.m.hidden_biases, s.v.hidden_biases, lr, b1, b2, eps, c1, c2);
  adam_update(model.output_weights, g.output_weights, s.m.output_weights, s.v.output_weights, lr, b1, b2, eps, c1, c2);
  adam_update(model.output_biases, g.output_biases, s.m.output_biases, s.v.output_biases, lr, b1, b2, eps, c1, c2);
}

void apply_sgd(MlpModel& model, const Gradients& g, double lr) {
  model.hidden_weights -= lr * g.hidden_weights;
  model.hidden_biases -= lr * g.hidden_biases;
  model.output_weights -= lr * g.output_weights;
  model.output_biases -= lr * g.output_biases;
}

struct Batch {
  Matrix X;
  std::vector<int> labels;
};

Batch gather(const LabeledDataset& data, std::span<const int> labels,
             std::span<const std::size_t> rows) {
  Batch b;
  b.X.resize(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  b.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    b.X.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(rows[i]));
    b.labels[i] = labels[rows[i]];
  }
  return b;
}

struct Evaluation {
  double loss = 0.0;
  double coarse_accuracy = 0.0;
};

Evaluation evaluate(const MlpModel& model, const Batch& b, std::span<const int> coarse,
                    LossKind loss, const Hierarchy& h) {
  const ForwardTrace trace = forward(model, b.X);
  Evaluation e;
  e.loss = trace_loss(model, trace, b.labels, loss, &h);
  const Vector pred = coarse_probabilities(model, trace, h);
  e.coarse_accuracy = coarse_accuracy(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())), coarse);
  return e;
}

}  // namespace

const char* to_string(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::Sgd;
  if (s == "adam") return Optimizer::Adam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
  if (!(lr_start > 0.0) || !(lr_end > 0.0)) throw ConfigError("learning rates must be positive");
  if (lr_end > lr_start) throw ConfigError("lr_end must not exceed lr_start");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  if (early_stop_patience < 0) throw ConfigError("early_stop_patience must be >= 0");
  if (!(validation_fraction >= 0.0 && validation_fraction < 0.5)) {
    throw ConfigError("validation_fraction must lie in [0, 0.5)");
  }
}

TrainConfig TrainConfig::adam_defaults() {
  TrainConfig cfg;
  cfg.optimizer = Optimizer::Adam;
  cfg.lr_start = 0.001;
  cfg.lr_end = 0.001;
  cfg.adam_beta1 = 0.9;
  cfg.adam_beta2 = 0.999;
  cfg.adam_epsilon = 1e-7;
  return cfg;
}

double scheduled_learning_rate(const TrainConfig& cfg, int epoch) {
  if (cfg.max_epochs <= 1) return cfg.lr_start;
  const double t = static_cast<double>(std::clamp(epoch, 0, cfg.max_epochs - 1)) /
                   static_cast<double>(cfg.max_epochs - 1);
  return cfg.lr_start + (cfg.lr_end - cfg.lr_start) * t;
}

TrainedModel train(MlpModel model, const LabeledDataset& data, const TrainConfig& cfg,
                   LossKind loss) {
  cfg.validate();
  model.validate();
  data.validate();
  if (data.size() == 0) throw DomainError("cannot train on an empty dataset");
  if (data.dim() != model.input_dim()) {
    throw ShapeError("dataset dimension " + std::to_string(data.dim()) + " != model input " +
                     std::to_string(model.input_dim()));
  }
  const bool coarse_head = model.head == HeadKind::CoarseSigmoid;
  if (!coarse_head && model.output_dim() != data.K()) {
    throw ConfigError("model has " + std::to_string(model.output_dim()) + " outputs but the data has K=" +
                      std::to_string(data.K()));
  }
  if (coarse_head && loss.kind != LossKind::Kind::Coarse) {
    throw ConfigError("a sigmoid-head model can only be trained with the coarse loss");
  }

  const std::vector<int> coarse = data.coarse_labels();
  const std::vector<int>& labels = coarse_head ? coarse : data.fine_labels;

  // Held-out validation rows come first in a seeded permutation.
  const std::size_t P = data.size();
  std::size_t n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(P)));
  if (cfg.validation_fraction > 0.0 && n_val == 0 && P >= 2) n_val = 1;
  n_val = std::min(n_val, P - 1);
  Rng split_rng(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> order = split_rng.permutation(P);
  std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  const Batch train_all = gather(data, labels, train_rows);
  std::vector<int> train_coarse(train_rows.size());
  for (std::size_t i = 0; i < train_rows.size(); ++i) train_coarse[i] = coarse[train_rows[i]];
  const Batch val_all = n_val > 0 ? gather(data, labels, val_rows) : Batch{};
  std::vector<int> val_coarse(val_rows.size());
  for (std::size_t i = 0; i < val_rows.size(); ++i) val_coarse[i] = coarse[val_rows[i]];

  Rng shuffle_rng(derive_seed(cfg.seed, 2));
  AdamState adam(model);
  TrainedModel out;
  MlpModel best = model;
  double best_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cfg.optimizer == Optimizer::Sgd ? scheduled_learning_rate(cfg, epoch) : cfg.lr_start;
    shuffle_rng.shuffle(std::span<std::size_t>(train_rows));
    for (std::size_t start = 0; start < train_rows.size(); start += batch) {
      const std::size_t len = std::min(batch, train_rows.size() - start);
      const Batch b = gather(data, labels, std::span<const std::size_t>(train_rows).subspan(start, len));
      const ForwardTrace trace = forward(model, b.X);
      const Gradients g = backward(model, b.X, trace, b.labels, loss, &data.hierarchy);
      if (cfg.optimizer == Optimizer::Sgd) {
        apply_sgd(model, g, lr);
      } else {
        apply_adam(model, g, adam, cfg);
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.learning_rate = lr;
    const Evaluation tr = evaluate(model, train_all, train_coarse, loss, data.hierarchy);
    entry.train_loss = tr.loss;
    entry.train_coarse_accuracy = tr.coarse_accuracy;
    entry.validation_loss = n_val > 0 ? evaluate(model, val_all, val_coarse, loss, data.hierarchy).loss : tr.loss;
    if (!std::isfinite(entry.train_loss) || !std::isfinite(entry.validation_loss)) {
      throw DivergenceError("training loss became non-finite", epoch);
    }
    out.log.epochs.push_back(entry);

    if (entry.validation_loss < best_loss) {
      best_loss = entry.validation_loss;
      best = model;
      out.log.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
      if (cfg.early_stop_patience > 0 && since_best >= cfg.early_stop_patience) {
        out.log.stopped_early = true;
        break;
      }
    }
  }

  out.log.best_validation_loss = best_loss;
  out.model = std::move(best);
  return out;
}

double model_coarse_accuracy(const MlpModel& model, const LabeledDataset& data) {
  const ForwardTrace trace = forward(model, data.features);
  const Vector pred = coarse_probabilities(model, trace, data.hierarchy);
  const std::vector<int> coarse = data.coarse_labels();
  return coarse_accuracy(std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size())), coarse);
}

}  // namespace granlab
