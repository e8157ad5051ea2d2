#pragma once

#include <string>
#include <string_view>

#include <Eigen/Core>

namespace dreamhop {

enum class Variant { BasicStoring, Supervised, Unsupervised };

std::string to_string(Variant v);
// Accepts "storing", "supervised", "unsupervised" (and "a", "b", "c").
Variant parse_variant(std::string_view name);

// Which scenario a coupling or a law refers to. `quality` (r) and
// `per_class` (M) are ignored for BasicStoring.
struct ModelSetting {
  Variant variant = Variant::BasicStoring;
  double alpha = 0.1;
  double quality = 1.0;
  Eigen::Index per_class = 1;

  // Throws DomainError unless alpha in (0,1], r in [0,1], M >= 1.
  void validate() const;
  // Unsupervised theory needs a full-rank coupling: M * alpha >= 1.
  [[nodiscard]] bool full_rank_unsupervised() const noexcept;
};

}  // namespace dreamhop
