#pragma once

#include <cstdint>
#include <optional>

#include "granlab/dataset.hpp"

namespace granlab {

// K concentric circles of radius 2j/K (j = 1..K) whose coarse class
// alternates with radius. Each circle is mostly one subclass; a fraction
// `redundancy` of its angular extent is handed to the other subclasses of the
// same coarse class.
struct CircleSpec {
  int K = 8;
  int n_points = 5000;
  double redundancy = 0.0;
  std::optional<double> radial_jitter;  // default 0.02 * (2/K)
  double sector_offset_per_circle = 0.0;
  std::uint64_t seed = 0;

  static double max_redundancy(int K) { return 1.0 - 2.0 / K; }
  double effective_jitter() const { return radial_jitter.value_or(0.02 * (2.0 / K)); }

  // Throws ConfigError (quoting the bound when redundancy is too large).
  void validate() const;
};

// Circle j (1-based) has coarse label j mod 2 and dominant fine class j - 1.
// Odd circles (label 1) form C0, even circles form C1. Points carry their
// circle index in `circle_index`.
LabeledDataset generate_circles(const CircleSpec& spec);

// Mean over circles of one minus the share of the most frequent subclass.
// Throws DomainError if the dataset has no circle metadata.
double redundancy_of(const LabeledDataset& data);

}  // namespace granlab
