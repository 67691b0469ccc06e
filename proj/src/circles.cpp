#include "granlab/circles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "granlab/errors.hpp"
#include "granlab/rng.hpp"

namespace granlab {

void CircleSpec::validate() const {
  if (K < 2 || K % 2 != 0) throw ConfigError("circles: K must be an even integer >= 2, got " + std::to_string(K));
  if (n_points < 1) throw ConfigError("circles: n_points must be positive");
  if (!(redundancy >= 0.0)) throw ConfigError("circles: redundancy must be >= 0");
  const double bound = max_redundancy(K);
  if (redundancy > bound) {
    std::ostringstream msg;
    msg << "circles: redundancy " << redundancy << " exceeds the maximum 1 - 2/K = " << bound
        << " for K=" << K;
    throw ConfigError(msg.str());
  }
  if (radial_jitter && !(*radial_jitter >= 0.0)) throw ConfigError("circles: radial_jitter must be >= 0");
  if (!std::isfinite(sector_offset_per_circle)) throw ConfigError("circles: sector offset must be finite");
}

LabeledDataset generate_circles(const CircleSpec& spec) {
  spec.validate();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const int K = spec.K;
  const int per_side = K / 2;
  const double jitter = spec.effective_jitter();
  const double dominant_arc = two_pi * (1.0 - spec.redundancy);
  const double minority_arc = per_side > 1 ? two_pi * spec.redundancy / (per_side - 1) : 0.0;

  // Odd circles (coarse label 1) own the even fine indices 0, 2, ...
  std::vector<int> c0, c1;
  for (int k = 0; k < K; ++k) (k % 2 == 0 ? c0 : c1).push_back(k);

  LabeledDataset data;
  data.hierarchy = Hierarchy(K, c0, c1);
  std::ostringstream name;
  name << "circles-K" << K << "-rho" << spec.redundancy;
  data.name = name.str();
  for (int k = 0; k < K; ++k) data.fine_names.push_back("circle" + std::to_string(k + 1));

  const auto n = static_cast<std::size_t>(spec.n_points);
  data.features.resize(static_cast<Eigen::Index>(n), 2);
  data.fine_labels.resize(n);
  data.circle_index.resize(n);

  Rng rng(spec.seed);
  std::size_t row = 0;
  for (int j = 1; j <= K; ++j) {
    const std::size_t count = n / static_cast<std::size_t>(K) + (static_cast<std::size_t>(j - 1) < n % static_cast<std::size_t>(K) ? 1 : 0);
    const std::vector<int>& family = j % 2 == 1 ? c0 : c1;
    const int own = (j - 1) / 2;  // position of fine class j-1 within its family
    const double start = j * spec.sector_offset_per_circle;
    const double radius = 2.0 * j / K;

    for (std::size_t i = 0; i < count; ++i, ++row) {
      const double theta = rng.uniform(0.0, two_pi);
      const double r = radius + rng.uniform(-jitter, jitter);
      const double rel = std::fmod(std::fmod(theta - start, two_pi) + two_pi, two_pi);

      int label = family[static_cast<std::size_t>(own)];
      if (rel >= dominant_arc && minority_arc > 0.0) {
        const int slot = std::min(static_cast<int>((rel - dominant_arc) / minority_arc), per_side - 2);
        label = family[static_cast<std::size_t>((own + 1 + slot) % per_side)];
      }

      const auto e = static_cast<Eigen::Index>(row);
      data.features(e, 0) = r * std::cos(theta);
      data.features(e, 1) = r * std::sin(theta);
      data.fine_labels[row] = label;
      data.circle_index[row] = j - 1;
    }
  }
  return data;
}

double redundancy_of(const LabeledDataset& data) {
  if (data.circle_index.empty() || data.circle_index.size() != data.size()) {
    throw DomainError("redundancy_of needs per-point circle metadata");
  }
  const int circles = *std::max_element(data.circle_index.begin(), data.circle_index.end()) + 1;
  std::vector<std::vector<std::size_t>> counts(static_cast<std::size_t>(circles),
                                               std::vector<std::size_t>(static_cast<std::size_t>(data.K()), 0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    ++counts[static_cast<std::size_t>(data.circle_index[i])][static_cast<std::size_t>(data.fine_labels[i])];
  }
  double total = 0.0;
  int used = 0;
  for (const auto& c : counts) {
    std::size_t n = 0;
    for (std::size_t v : c) n += v;
    if (n == 0) continue;
    const std::size_t top = *std::max_element(c.begin(), c.end());
    total += 1.0 - static_cast<double>(top) / static_cast<double>(n);
    ++used;
  }
  if (used == 0) throw DomainError("redundancy_of: no populated circles");
  return total / used;
}

}  // namespace granlab
