#pragma once

#include <vector>

#include "dreamhop/spectral_theory.hpp"

namespace dreamhop {

// First and non-centered second moment of the per-site stability or
// attractiveness under the Gaussian approximation.
struct MomentPair {
  double mu1 = 0.0;
  double mu2 = 0.0;

  [[nodiscard]] double variance() const noexcept { return mu2 - mu1 * mu1; }
};

enum class ScenarioKind {
  StoringStability,
  StoringAttractiveness,      // probes on the Hamming ball of overlap p
  SupervisedAttractiveness,   // test examples of quality r
  UnsupervisedAttractiveness  // test examples of quality r
};

struct RetrievalScenario {
  ScenarioKind kind = ScenarioKind::StoringStability;
  // p for StoringAttractiveness, r for the (un)supervised kinds, 1 otherwise.
  double overlap = 1.0;
  SpectralLaw law;
};

// Builds the scenario together with its matching law.
RetrievalScenario make_scenario(ScenarioKind kind, double alpha, double t, double overlap = 1.0);

MomentPair moments(const RetrievalScenario& scenario, const QuadratureOptions& opts = {});

struct MagnetizationPrediction {
  double m1 = 0.0;
  // Set when mu2 <= mu1^2, where the Gaussian collapses to its mean.
  bool degenerate_variance = false;
};

// erf(mu1 / sqrt(2 (mu2 - mu1^2))).
MagnetizationPrediction m1_theory(const MomentPair& m);

// 2 alpha p (1 - p^2) * int l^2 dmu_t; the third-moment obstruction to the
// Gaussian approximation, small when the approximation is sound.
double ga_validity_bound(const SpectralLaw& law, double p, double alpha,
                         const QuadratureOptions& opts = {});

inline constexpr double kDefaultGaThreshold = 0.1;

struct CurvePoint {
  double x = 0.0;   // p, r or alpha depending on the scenario
  double m0 = 0.0;  // overlap of the probe with the reference
  double m1 = 0.0;
  double ga_bound = 0.0;
  bool ga_flagged = false;
  bool degenerate_variance = false;
};

// One row per grid value, in input order. For StoringStability the grid
// runs over alpha (with m0 = 1); otherwise over p or r at fixed alpha.
std::vector<CurvePoint> predict_curve(ScenarioKind kind, double alpha, double t,
                                      const std::vector<double>& grid,
                                      double ga_threshold = kDefaultGaThreshold);

}  // namespace dreamhop
