#include "granlab/hierarchy.hpp"

#include <algorithm>
#include <string>

#include "granlab/errors.hpp"

namespace granlab {

Hierarchy::Hierarchy(int K, std::vector<int> c0, std::vector<int> c1)
    : K_(K), c0_(std::move(c0)), c1_(std::move(c1)) {
  if (K_ < 2) throw ConfigError("hierarchy needs K >= 2, got " + std::to_string(K_));
  if (c0_.empty() || c1_.empty()) throw ConfigError("hierarchy: both coarse classes must be non-empty");
  std::sort(c0_.begin(), c0_.end());
  std::sort(c1_.begin(), c1_.end());

  std::vector<int> seen(static_cast<std::size_t>(K_), 0);
  auto mark = [&](const std::vector<int>& set) {
    for (int i : set) {
      if (i < 0 || i >= K_) {
        throw ConfigError("hierarchy: fine index " + std::to_string(i) + " outside 0.." +
                          std::to_string(K_ - 1));
      }
      if (seen[static_cast<std::size_t>(i)]++ != 0) {
        throw ConfigError("hierarchy: fine index " + std::to_string(i) +
                          " appears more than once");
      }
    }
  };
  mark(c0_);
  mark(c1_);
  if (c0_.size() + c1_.size() != static_cast<std::size_t>(K_)) {
    throw ConfigError("hierarchy: C0 and C1 must cover all " + std::to_string(K_) + " fine classes");
  }

  side_.assign(static_cast<std::size_t>(K_), 0);
  for (int i : c0_) side_[static_cast<std::size_t>(i)] = 1;
}

Hierarchy Hierarchy::binary() { return Hierarchy(2, {0}, {1}); }

std::vector<int> Hierarchy::coarse_labels(std::span<const int> fine) const {
  std::vector<int> out(fine.size());
  for (std::size_t i = 0; i < fine.size(); ++i) out[i] = coarse_label(fine[i]);
  return out;
}

}  // namespace granlab
