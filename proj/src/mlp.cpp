#include "granlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "granlab/errors.hpp"
#include "granlab/rng.hpp"

namespace granlab {
namespace {

void fill_glorot(Matrix& w, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
  }
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// log(1 + exp(u)) without overflow.
double softplus(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

const double kMaxLogLoss = -std::log(kProbFloor);

void check_labels(const ForwardTrace& trace, std::span<const int> labels) {
  if (trace.outputs.rows() == 0) throw DomainError("loss on an empty batch");
  if (static_cast<std::size_t>(trace.outputs.rows()) != labels.size()) {
    throw ShapeError("trace has " + std::to_string(trace.outputs.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels were given");
  }
}

void check_compat(const MlpModel& model, LossKind loss, const Hierarchy* h) {
  if (model.head == HeadKind::CoarseSigmoid) {
    if (loss.kind != LossKind::Kind::Coarse) {
      throw ConfigError(std::string("a sigmoid head only supports the coarse loss, not ") +
                        to_string(loss.kind));
    }
    return;
  }
  if (loss.kind != LossKind::Kind::Fine && h == nullptr) {
    throw ConfigError(std::string("the ") + to_string(loss.kind) +
                      " loss on a softmax head needs a hierarchy");
  }
  if (h != nullptr && h->K() != model.output_dim()) {
    throw ConfigError("hierarchy K=" + std::to_string(h->K()) + " does not match " +
                      std::to_string(model.output_dim()) + " model outputs");
  }
}

// d(loss)/d(logits), already divided by the batch size.
Matrix output_delta(const MlpModel& model, const ForwardTrace& trace, std::span<const int> labels,
                    LossKind loss, const Hierarchy* h) {
  const Eigen::Index p = trace.outputs.rows();
  const double inv_p = 1.0 / static_cast<double>(p);
  Matrix delta(p, trace.outputs.cols());

  if (model.head == HeadKind::CoarseSigmoid) {
    for (Eigen::Index r = 0; r < p; ++r) {
      const double u = trace.preactivations(r, 0);
      const double y_hat = trace.outputs(r, 0);
      const int y = labels[static_cast<std::size_t>(r)];
      if (y != 0 && y != 1) throw DomainError("coarse labels must be 0 or 1");
      // Zero slope once the floor clamps the loss.
      if (y == 1) {
        delta(r, 0) = softplus(-u) < kMaxLogLoss ? (y_hat - 1.0) * inv_p : 0.0;
      } else {
        delta(r, 0) = softplus(u) < kMaxLogLoss ? y_hat * inv_p : 0.0;
      }
    }
    return delta;
  }

  const Eigen::Index K = trace.outputs.cols();
  const double beta = loss.kind == LossKind::Kind::Hybrid ? loss.beta : 1.0;
  const bool use_coarse = loss.kind == LossKind::Kind::Coarse || loss.kind == LossKind::Kind::Hybrid;
  const bool use_intra =
      loss.kind == LossKind::Kind::IntraClass || loss.kind == LossKind::Kind::Hybrid;
  Eigen::RowVectorXd g(K);
  for (Eigen::Index r = 0; r < p; ++r) {
    const auto probs = trace.outputs.row(r);
    const int t = labels[static_cast<std::size_t>(r)];
    if (t < 0 || t >= K) throw DomainError("label " + std::to_string(t) + " out of range");
    g.setZero();

    if (loss.kind == LossKind::Kind::Fine) {
      if (probs(t) > kProbFloor) g(t) = -1.0 / probs(t);
    } else {
      const auto& side = h->in_c0(t) ? h->c0() : h->c1();
      double mass = 0.0;
      for (int j : side) mass += probs(j);
      if (use_coarse && mass > kProbFloor) {
        for (int j : side) g(j) -= 1.0 / mass;
      }
      if (use_intra) {
        const double q = std::max(probs(t), kProbFloor);
        const double rest = mass - probs(t);
        for (int j : side) {
          if (j != t) g(j) += beta / (q + rest);
        }
        if (probs(t) > kProbFloor) g(t) -= beta * rest / (q * (q + rest));
      }
    }

    // Softmax Jacobian-vector product.
    const double gy = probs.dot(g);
    for (Eigen::Index k = 0; k < K; ++k) delta(r, k) = probs(k) * (g(k) - gy) * inv_p;
  }
  return delta;
}

}  // namespace

const char* to_string(Activation a) { return a == Activation::Relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "' (expected relu or tanh)");
}

std::int64_t parameter_count(int d, int N, int out_dim) {
  return static_cast<std::int64_t>(N) * (d + 1) + static_cast<std::int64_t>(out_dim) * (N + 1);
}

std::int64_t MlpModel::parameter_count() const {
  return granlab::parameter_count(input_dim(), hidden_count(), output_dim());
}

void MlpModel::validate() const {
  const auto N = hidden_weights.rows();
  if (hidden_weights.cols() < 1 || N < 1) throw ConfigError("model needs d >= 1 and N >= 1");
  if (hidden_biases.size() != N || output_weights.cols() != N ||
      output_biases.size() != output_weights.rows()) {
    throw ConfigError("inconsistent parameter shapes");
  }
  if (head == HeadKind::CoarseSigmoid && output_weights.rows() != 1) {
    throw ConfigError("a sigmoid head has exactly one output");
  }
  if (head == HeadKind::FineSoftmax && output_weights.rows() < 2) {
    throw ConfigError("a softmax head needs K >= 2 outputs");
  }
  if (!hidden_weights.allFinite() || !hidden_biases.allFinite() || !output_weights.allFinite() ||
      !output_biases.allFinite()) {
    throw ConfigError("model contains non-finite parameters");
  }
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  return a.head == b.head && a.activation == b.activation &&
         a.hidden_weights.rows() == b.hidden_weights.rows() &&
         a.hidden_weights.cols() == b.hidden_weights.cols() &&
         a.output_weights.rows() == b.output_weights.rows() &&
         a.hidden_weights == b.hidden_weights && a.hidden_biases == b.hidden_biases &&
         a.output_weights == b.output_weights && a.output_biases == b.output_biases;
}

MlpModel glorot_init(int d, int N, int out_dim, std::uint64_t seed, Activation activation) {
  if (d < 1) throw ConfigError("input dimension must be >= 1");
  if (N < 1) throw ConfigError("hidden width must be >= 1");
  if (out_dim < 1) throw ConfigError("output dimension must be >= 1");

  MlpModel m;
  m.head = out_dim == 1 ? HeadKind::CoarseSigmoid : HeadKind::FineSoftmax;
  m.activation = activation;
  m.hidden_weights.resize(N, d);
  m.output_weights.resize(out_dim, N);
  m.hidden_biases = Vector::Zero(N);
  m.output_biases = Vector::Zero(out_dim);

  Rng rng(seed);
  fill_glorot(m.hidden_weights, d, N, rng);
  fill_glorot(m.output_weights, N, out_dim, rng);
  return m;
}

int match_capacity(int N_fine, int d, int K) {
  // Widest coarse model whose parameter count does not exceed the fine one's.
  const std::int64_t fine = parameter_count(d, N_fine, K);
  const std::int64_t width = (fine - 1) / (d + 2);
  return static_cast<int>(std::max<std::int64_t>(width, 1));
}

ForwardTrace forward(const MlpModel& model, const Matrix& X) {
  if (X.cols() != model.input_dim()) {
    throw ShapeError("input has " + std::to_string(X.cols()) + " columns, model expects " +
                     std::to_string(model.input_dim()));
  }
  ForwardTrace t;
  t.hidden_preactivations = X * model.hidden_weights.transpose();
  t.hidden_preactivations.rowwise() += model.hidden_biases.transpose();
  if (model.activation == Activation::Relu) {
    t.hidden_activations = t.hidden_preactivations.cwiseMax(0.0);
  } else {
    t.hidden_activations = t.hidden_preactivations.array().tanh().matrix();
  }
  t.preactivations = t.hidden_activations * model.output_weights.transpose();
  t.preactivations.rowwise() += model.output_biases.transpose();

  t.outputs.resize(t.preactivations.rows(), t.preactivations.cols());
  if (model.head == HeadKind::CoarseSigmoid) {
    for (Eigen::Index r = 0; r < t.outputs.rows(); ++r) t.outputs(r, 0) = sigmoid(t.preactivations(r, 0));
  } else {
    for (Eigen::Index r = 0; r < t.outputs.rows(); ++r) {
      const double top = t.preactivations.row(r).maxCoeff();
      double sum = 0.0;
      for (Eigen::Index k = 0; k < t.outputs.cols(); ++k) {
        const double e = std::exp(t.preactivations(r, k) - top);
        t.outputs(r, k) = e;
        sum += e;
      }
      t.outputs.row(r) /= sum;
    }
  }
  return t;
}

Vector aggregate_fine_to_coarse(const Matrix& fine_probs, const Hierarchy& h) {
  if (fine_probs.cols() != h.K()) {
    throw ConfigError("hierarchy has K=" + std::to_string(h.K()) + " but probabilities have " +
                      std::to_string(fine_probs.cols()) + " columns");
  }
  Vector out = Vector::Zero(fine_probs.rows());
  for (Eigen::Index r = 0; r < fine_probs.rows(); ++r) {
    for (int k : h.c0()) out(r) += fine_probs(r, k);
  }
  return out;
}

Vector coarse_probabilities(const MlpModel& model, const ForwardTrace& trace, const Hierarchy& h) {
  if (model.head == HeadKind::CoarseSigmoid) return trace.outputs.col(0);
  return aggregate_fine_to_coarse(trace.outputs, h);
}

double Gradients::squared_norm() const {
  return hidden_weights.squaredNorm() + hidden_biases.squaredNorm() +
         output_weights.squaredNorm() + output_biases.squaredNorm();
}

double trace_loss(const MlpModel& model, const ForwardTrace& trace, std::span<const int> labels,
                  LossKind loss, const Hierarchy* h) {
  check_compat(model, loss, h);
  check_labels(trace, labels);
  if (model.head == HeadKind::CoarseSigmoid) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < trace.preactivations.rows(); ++r) {
      const double u = trace.preactivations(r, 0);
      const int y = labels[static_cast<std::size_t>(r)];
      if (y != 0 && y != 1) throw DomainError("coarse labels must be 0 or 1");
      total += std::min(y == 1 ? softplus(-u) : softplus(u), kMaxLogLoss);
    }
    return total / static_cast<double>(trace.preactivations.rows());
  }
  if (loss.kind == LossKind::Kind::Fine) return loss_fine(trace.outputs, labels);
  return fine_head_loss(trace.outputs, labels, *h, loss);
}

Gradients backward(const MlpModel& model, const Matrix& X, const ForwardTrace& trace,
                   std::span<const int> labels, LossKind loss, const Hierarchy* h) {
  check_compat(model, loss, h);
  check_labels(trace, labels);
  if (X.rows() != trace.outputs.rows() || X.cols() != model.input_dim()) {
    throw ShapeError("input batch does not match the trace");
  }

  const Matrix delta = output_delta(model, trace, labels, loss, h);
  Gradients g;
  g.output_weights = delta.transpose() * trace.hidden_activations;
  g.output_biases = delta.colwise().sum().transpose();

  Matrix hidden_delta = delta * model.output_weights;
  if (model.activation == Activation::Relu) {
    hidden_delta.array() *= (trace.hidden_preactivations.array() > 0.0).cast<double>();
  } else {
    hidden_delta.array() *= 1.0 - trace.hidden_activations.array().square();
  }
  g.hidden_weights = hidden_delta.transpose() * X;
  g.hidden_biases = hidden_delta.colwise().sum().transpose();
  return g;
}

}  // namespace granlab
