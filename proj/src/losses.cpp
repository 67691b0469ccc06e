#include "granlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "granlab/errors.hpp"

namespace granlab {
namespace {

double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

void check_batch(const Matrix& probs, std::span<const int> labels) {
  if (probs.rows() == 0) throw DomainError("loss on an empty batch");
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw ShapeError("probability rows (" + std::to_string(probs.rows()) +
                     ") and labels (" + std::to_string(labels.size()) + ") differ");
  }
  for (int y : labels) {
    if (y < 0 || y >= probs.cols()) {
      throw DomainError("label " + std::to_string(y) + " outside 0.." +
                        std::to_string(probs.cols() - 1));
    }
  }
}

void check_hierarchy(const Matrix& probs, const Hierarchy& h) {
  if (h.K() != probs.cols()) {
    throw ConfigError("hierarchy has K=" + std::to_string(h.K()) + " but predictions have " +
                      std::to_string(probs.cols()) + " classes");
  }
}

// Probability mass of the coarse class that contains `label`.
double side_mass(const Matrix& probs, Eigen::Index row, int label, const Hierarchy& h) {
  const auto& side = h.in_c0(label) ? h.c0() : h.c1();
  double s = 0.0;
  for (int j : side) s += probs(row, j);
  return s;
}

}  // namespace

LossKind LossKind::hybrid(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("hybrid loss weight beta must lie in [0, 1], got " + std::to_string(beta));
  }
  return {Kind::Hybrid, beta};
}

const char* to_string(LossKind::Kind kind) {
  switch (kind) {
    case LossKind::Kind::Coarse: return "coarse";
    case LossKind::Kind::Fine: return "fine";
    case LossKind::Kind::IntraClass: return "intra";
    case LossKind::Kind::Hybrid: return "hybrid";
  }
  return "?";
}

std::vector<int> labels_from_one_hot(const Matrix& y) {
  std::vector<int> labels(static_cast<std::size_t>(y.rows()));
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    int hot = -1;
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      const double v = y(r, c);
      if (v == 1.0 && hot < 0) {
        hot = static_cast<int>(c);
      } else if (v != 0.0) {
        hot = -2;
        break;
      }
    }
    if (hot < 0) throw DomainError("row " + std::to_string(r) + " of the label matrix is not one-hot");
    labels[static_cast<std::size_t>(r)] = hot;
  }
  return labels;
}

Matrix one_hot(std::span<const int> labels, int K) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), K);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= K) throw DomainError("label out of range in one_hot");
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

double loss_coarse(std::span<const double> coarse_probs, std::span<const int> Y) {
  if (coarse_probs.empty()) throw DomainError("loss on an empty batch");
  if (coarse_probs.size() != Y.size()) throw ShapeError("coarse predictions and labels differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    if (Y[i] != 0 && Y[i] != 1) throw DomainError("coarse labels must be 0 or 1");
    total += Y[i] == 1 ? safe_log(coarse_probs[i]) : safe_log(1.0 - coarse_probs[i]);
  }
  return -total / static_cast<double>(Y.size());
}

double loss_fine(const Matrix& fine_probs, std::span<const int> labels) {
  check_batch(fine_probs, labels);
  double total = 0.0;
  for (Eigen::Index r = 0; r < fine_probs.rows(); ++r) {
    total += safe_log(fine_probs(r, labels[static_cast<std::size_t>(r)]));
  }
  return -total / static_cast<double>(fine_probs.rows());
}

double loss_fine(const Matrix& fine_probs, const Matrix& y_one_hot) {
  return loss_fine(fine_probs, labels_from_one_hot(y_one_hot));
}

double loss_intra(const Matrix& fine_probs, std::span<const int> labels, const Hierarchy& h) {
  check_batch(fine_probs, labels);
  check_hierarchy(fine_probs, h);
  double total = 0.0;
  for (Eigen::Index r = 0; r < fine_probs.rows(); ++r) {
    const int t = labels[static_cast<std::size_t>(r)];
    const auto& side = h.in_c0(t) ? h.c0() : h.c1();
    double others = 0.0;
    for (int j : side) {
      if (j != t) others += fine_probs(r, j);
    }
    total += std::log1p(others / std::max(fine_probs(r, t), kProbFloor));
  }
  return total / static_cast<double>(fine_probs.rows());
}

double loss_intra(const Matrix& fine_probs, const Matrix& y_one_hot, const Hierarchy& h) {
  return loss_intra(fine_probs, labels_from_one_hot(y_one_hot), h);
}

double loss_coarse_aggregated(const Matrix& fine_probs, std::span<const int> labels,
                              const Hierarchy& h) {
  check_batch(fine_probs, labels);
  check_hierarchy(fine_probs, h);
  double total = 0.0;
  for (Eigen::Index r = 0; r < fine_probs.rows(); ++r) {
    total += safe_log(side_mass(fine_probs, r, labels[static_cast<std::size_t>(r)], h));
  }
  return -total / static_cast<double>(fine_probs.rows());
}

double loss_hybrid(const Matrix& fine_probs, std::span<const int> labels, const Hierarchy& h,
                   double beta) {
  const LossKind kind = LossKind::hybrid(beta);
  return loss_coarse_aggregated(fine_probs, labels, h) + kind.beta * loss_intra(fine_probs, labels, h);
}

double loss_hybrid(const Matrix& fine_probs, const Matrix& y_one_hot, const Hierarchy& h,
                   double beta) {
  return loss_hybrid(fine_probs, labels_from_one_hot(y_one_hot), h, beta);
}

double fine_head_loss(const Matrix& fine_probs, std::span<const int> labels, const Hierarchy& h,
                      LossKind kind) {
  switch (kind.kind) {
    case LossKind::Kind::Coarse: return loss_coarse_aggregated(fine_probs, labels, h);
    case LossKind::Kind::Fine: return loss_fine(fine_probs, labels);
    case LossKind::Kind::IntraClass: return loss_intra(fine_probs, labels, h);
    case LossKind::Kind::Hybrid: return loss_hybrid(fine_probs, labels, h, kind.beta);
  }
  throw ConfigError("unknown loss kind");
}

DecompositionReport verify_decomposition(const Matrix& fine_probs, std::span<const int> labels,
                                         const Hierarchy& h) {
  DecompositionReport rep;
  rep.fine = loss_fine(fine_probs, labels);
  rep.coarse = loss_coarse_aggregated(fine_probs, labels, h);
  rep.intra = loss_intra(fine_probs, labels, h);
  rep.residual = std::abs(rep.fine - rep.coarse - rep.intra);
  return rep;
}

DecompositionReport verify_decomposition(const Matrix& fine_probs, const Matrix& y_one_hot,
                                         const Hierarchy& h) {
  return verify_decomposition(fine_probs, labels_from_one_hot(y_one_hot), h);
}

}  // namespace granlab
