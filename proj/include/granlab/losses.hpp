#pragma once

#include <span>
#include <vector>

#include "granlab/hierarchy.hpp"
#include "granlab/types.hpp"

namespace granlab {

// Lower bound applied to every probability inside a logarithm and to the
// denominator of the intra-class ratio.
inline constexpr double kProbFloor = 1e-12;

struct LossKind {
  enum class Kind { Coarse, Fine, IntraClass, Hybrid };

  Kind kind = Kind::Fine;
  double beta = 1.0;  // only read for Hybrid

  static LossKind coarse() { return {Kind::Coarse, 0.0}; }
  static LossKind fine() { return {Kind::Fine, 1.0}; }
  static LossKind intra() { return {Kind::IntraClass, 1.0}; }
  // Throws ConfigError unless beta is in [0, 1].
  static LossKind hybrid(double beta);

  friend bool operator==(const LossKind&, const LossKind&) = default;
};

const char* to_string(LossKind::Kind kind);

// Converts a one-hot matrix to class indices. Throws DomainError on any row
// that is not exactly one-hot.
std::vector<int> labels_from_one_hot(const Matrix& y);
Matrix one_hot(std::span<const int> labels, int K);

// Binary cross-entropy averaged over the batch; Y entries are 0 or 1.
double loss_coarse(std::span<const double> coarse_probs, std::span<const int> Y);

// Negative log-likelihood of the true fine class, averaged over the batch.
double loss_fine(const Matrix& fine_probs, std::span<const int> labels);
double loss_fine(const Matrix& fine_probs, const Matrix& y_one_hot);

// Mean of log(1 + (sum of the other probabilities in the true coarse class) /
// p_true). Zero when every coarse class has a single fine class.
double loss_intra(const Matrix& fine_probs, std::span<const int> labels, const Hierarchy& h);
double loss_intra(const Matrix& fine_probs, const Matrix& y_one_hot, const Hierarchy& h);

// Coarse BCE of the aggregated fine prediction. Each sample's probability is
// summed over its own coarse side, which keeps full precision when that mass
// is tiny (1 - sum(C0) would not).
double loss_coarse_aggregated(const Matrix& fine_probs, std::span<const int> labels,
                              const Hierarchy& h);

double loss_hybrid(const Matrix& fine_probs, std::span<const int> labels, const Hierarchy& h,
                   double beta);
double loss_hybrid(const Matrix& fine_probs, const Matrix& y_one_hot, const Hierarchy& h,
                   double beta);

// Any fine-head loss by kind.
double fine_head_loss(const Matrix& fine_probs, std::span<const int> labels, const Hierarchy& h,
                      LossKind kind);

struct DecompositionReport {
  double fine = 0.0;
  double coarse = 0.0;
  double intra = 0.0;
  double residual = 0.0;  // |fine - coarse - intra|
};

DecompositionReport verify_decomposition(const Matrix& fine_probs, std::span<const int> labels,
                                         const Hierarchy& h);
DecompositionReport verify_decomposition(const Matrix& fine_probs, const Matrix& y_one_hot,
                                         const Hierarchy& h);

}  // namespace granlab
