#include "dreamhop/rng.hpp"

namespace dreamhop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

RngSpec RngSpec::child(std::uint64_t index) const noexcept {
  return {seed, splitmix64(splitmix64(stream) ^ splitmix64(index + 0x632BE59BD9B4E019ULL))};
}

std::mt19937_64 RngSpec::engine() const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace dreamhop
