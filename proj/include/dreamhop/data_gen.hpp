#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dreamhop/rng.hpp"

namespace dreamhop {

using Index = Eigen::Index;
using SpinMatrix = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A configuration of N binary neurons.
class BinaryConfig {
 public:
  BinaryConfig() = default;
  explicit BinaryConfig(std::vector<std::int8_t> spins);

  static BinaryConfig from_row(const SpinMatrix& m, Index row);
  // Signs of a real vector with sign(0) = +1.
  static BinaryConfig sign_of(const Eigen::Ref<const Eigen::VectorXd>& v);

  [[nodiscard]] Index size() const noexcept { return static_cast<Index>(spins_.size()); }
  [[nodiscard]] int operator[](Index i) const { return spins_[static_cast<std::size_t>(i)]; }
  [[nodiscard]] std::span<const std::int8_t> spins() const noexcept { return spins_; }
  [[nodiscard]] Eigen::VectorXd as_vector() const;

  friend bool operator==(const BinaryConfig&, const BinaryConfig&) = default;

 private:
  std::vector<std::int8_t> spins_;
};

// Hamming distance (1/4) sum (a_i - b_i)^2, i.e. the number of differing sites.
Index hamming_distance(const BinaryConfig& a, const BinaryConfig& b);
// Overlap (1/N) sum a_i b_i.
double overlap(const BinaryConfig& a, const BinaryConfig& b);

// P x N archetypes, one per row.
struct GroundTruthSet {
  SpinMatrix patterns;

  [[nodiscard]] Index count() const noexcept { return patterns.rows(); }
  [[nodiscard]] Index size() const noexcept { return patterns.cols(); }
  [[nodiscard]] BinaryConfig pattern(Index mu) const { return BinaryConfig::from_row(patterns, mu); }
};

// Noisy examples xi^{mu,A} = chi^{mu,A} * zeta^mu. Row mu*M + A of `examples`
// holds example A of class mu.
struct ExampleSet {
  SpinMatrix examples;
  Index classes = 0;
  Index per_class = 0;
  double quality = 1.0;

  [[nodiscard]] Index size() const noexcept { return examples.cols(); }
  [[nodiscard]] Index row_of(Index mu, Index a) const noexcept { return mu * per_class + a; }
  [[nodiscard]] BinaryConfig example(Index mu, Index a) const {
    return BinaryConfig::from_row(examples, row_of(mu, a));
  }
};

// Entries i.i.d. Rad(p): +1 with probability (1+p)/2. Requires |p| <= 1.
BinaryConfig sample_rademacher(double p, Index n, const RngSpec& rng);

// P x N unbiased archetypes. Requires 1 <= P <= N.
GroundTruthSet make_ground_truths(Index n, Index p, const RngSpec& rng);

// M examples per archetype with multiplicative Rad(r) noise. Class mu draws
// from rng.child(mu), so classes can be generated independently.
ExampleSet make_examples(const GroundTruthSet& gt, Index m, double r, const RngSpec& rng);

// x'_i = eta_i x_i with eta_i ~ Rad(p), p in [0,1]. The expected Hamming
// distance to x is N(1-p)/2.
BinaryConfig perturb_on_ball(const BinaryConfig& x, double p, const RngSpec& rng);

// Dataset dump: int8 row-major binary, one block per archetype (the
// archetype row, then its M examples), plus a JSON sidecar at
// `<path>.json` with {N, P, M, r, seed, setting, layout, dtype}.
struct DatasetDump {
  GroundTruthSet ground_truths;
  std::optional<ExampleSet> examples;
  std::uint64_t seed = 0;
  std::string setting;
};

void write_dataset(const std::filesystem::path& path, const DatasetDump& dump);
DatasetDump read_dataset(const std::filesystem::path& path);

}  // namespace dreamhop
