#include "granlab/metrics.hpp"

#include "granlab/errors.hpp"

namespace granlab {

double coarse_accuracy(std::span<const double> predicted, std::span<const int> Y) {
  if (predicted.empty()) throw DomainError("accuracy of an empty batch");
  if (predicted.size() != Y.size()) throw ShapeError("predictions and labels differ in length");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const int decided = predicted[i] - 0.5 >= 0.0 ? 1 : 0;
    if (decided == Y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(Y.size());
}

}  // namespace granlab
