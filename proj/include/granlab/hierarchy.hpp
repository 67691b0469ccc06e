#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace granlab {

// Two-level label structure: K fine classes split into coarse sets C0 and C1.
// Fine classes are 0-based. The coarse label of a sample is 1 when its fine
// class lies in C0 and 0 when it lies in C1.
class Hierarchy {
 public:
  // Throws ConfigError unless c0 and c1 are non-empty, disjoint and together
  // cover 0..K-1.
  Hierarchy(int K, std::vector<int> c0, std::vector<int> c1);

  // Singleton coarse classes {0} vs {1}.
  static Hierarchy binary();

  int K() const noexcept { return K_; }
  const std::vector<int>& c0() const noexcept { return c0_; }
  const std::vector<int>& c1() const noexcept { return c1_; }

  bool in_c0(int fine) const { return side_[static_cast<std::size_t>(fine)] != 0; }
  int coarse_label(int fine) const { return in_c0(fine) ? 1 : 0; }
  std::vector<int> coarse_labels(std::span<const int> fine) const;

  // True when each coarse class holds exactly one fine class.
  bool singleton() const noexcept { return c0_.size() == 1 && c1_.size() == 1; }

  friend bool operator==(const Hierarchy& a, const Hierarchy& b) {
    return a.K_ == b.K_ && a.c0_ == b.c0_ && a.c1_ == b.c1_;
  }

 private:
  int K_;
  std::vector<int> c0_;
  std::vector<int> c1_;
  std::vector<std::uint8_t> side_;
};

}  // namespace granlab
