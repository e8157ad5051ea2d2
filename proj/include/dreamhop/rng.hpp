#pragma once

#include <cstdint>
#include <random>

namespace dreamhop {

// Identifies one reproducible random stream. Two equal specs always yield
// bit-identical sequences; child() derives independent sub-streams so that
// per-class or per-trial work can be generated in any order.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] RngSpec child(std::uint64_t index) const noexcept;
  [[nodiscard]] std::mt19937_64 engine() const;

  friend bool operator==(const RngSpec&, const RngSpec&) = default;
};

// Uniform double in [0,1) from the top 53 bits of one engine draw. Used
// instead of std::uniform_real_distribution, whose output is
// implementation-defined.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// One Rad(p) draw: +1 with probability (1+p)/2.
inline int rademacher(std::mt19937_64& eng, double p) {
  return uniform01(eng) < 0.5 * (1.0 + p) ? 1 : -1;
}

}  // namespace dreamhop
