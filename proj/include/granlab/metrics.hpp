#pragma once

#include <span>

namespace granlab {

// Fraction of predictions with Theta(p - 1/2) == Y, where Theta(0) = 1 so an
// exact 0.5 counts as a prediction of class 1. Throws DomainError on an empty
// batch and ShapeError on mismatched lengths.
double coarse_accuracy(std::span<const double> predicted, std::span<const int> Y);

}  // namespace granlab
