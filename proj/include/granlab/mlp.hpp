#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "granlab/hierarchy.hpp"
#include "granlab/losses.hpp"
#include "granlab/types.hpp"

namespace granlab {

enum class Activation { Relu, Tanh };
enum class HeadKind { FineSoftmax, CoarseSigmoid };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

// One-hidden-layer dense network.
//   hidden = act(x W^T + b)
//   logits = hidden V^T + c
// A FineSoftmax head has K >= 2 output rows and applies softmax; a
// CoarseSigmoid head has one output row and applies the logistic function.
struct MlpModel {
  HeadKind head = HeadKind::FineSoftmax;
  Activation activation = Activation::Relu;
  Matrix hidden_weights;  // N x d
  Vector hidden_biases;   // N
  Matrix output_weights;  // out x N
  Vector output_biases;   // out

  int input_dim() const { return static_cast<int>(hidden_weights.cols()); }
  int hidden_count() const { return static_cast<int>(hidden_weights.rows()); }
  int output_dim() const { return static_cast<int>(output_weights.rows()); }
  std::int64_t parameter_count() const;

  // Throws ConfigError if shapes are inconsistent, the head does not match the
  // output width, or any entry is non-finite.
  void validate() const;

  friend bool operator==(const MlpModel& a, const MlpModel& b);
};

// N*(d+1) + out*(N+1).
std::int64_t parameter_count(int d, int N, int out_dim);

// out_dim == 1 yields a CoarseSigmoid head, anything larger a FineSoftmax head.
MlpModel glorot_init(int d, int N, int out_dim, std::uint64_t seed,
                     Activation activation = Activation::Relu);

// Hidden width of a sigmoid-head model whose parameter count is closest to that
// of a softmax-head model with N_fine hidden units and K outputs.
int match_capacity(int N_fine, int d, int K);

struct ForwardTrace {
  Matrix hidden_preactivations;  // batch x N
  Matrix hidden_activations;     // batch x N
  Matrix preactivations;         // batch x out (logits u)
  Matrix outputs;                // softmax rows or sigmoid values
};

ForwardTrace forward(const MlpModel& model, const Matrix& X);

// Per-row sum of the C0 probabilities.
Vector aggregate_fine_to_coarse(const Matrix& fine_probs, const Hierarchy& h);

// Coarse probability for each row regardless of head type.
Vector coarse_probabilities(const MlpModel& model, const ForwardTrace& trace, const Hierarchy& h);

struct Gradients {
  Matrix hidden_weights;
  Vector hidden_biases;
  Matrix output_weights;
  Vector output_biases;

  double squared_norm() const;
};

// Loss of a trace. For a sigmoid head `labels` are coarse labels (0/1) and only
// LossKind::Coarse is allowed; for a softmax head they are fine-class indices.
// `h` may be null only for a softmax head with LossKind::Fine.
double trace_loss(const MlpModel& model, const ForwardTrace& trace, std::span<const int> labels,
                  LossKind loss, const Hierarchy* h);

// Exact gradient of trace_loss with respect to every parameter.
Gradients backward(const MlpModel& model, const Matrix& X, const ForwardTrace& trace,
                   std::span<const int> labels, LossKind loss, const Hierarchy* h);

}  // namespace granlab
