#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dreamhop/quadrature.hpp"
#include "dreamhop/setting.hpp"

namespace dreamhop {

struct BulkSupport {
  double lower = 0.0;
  double upper = 0.0;
};

// Limiting eigenvalue law of J(t):
//   (1 - alpha) delta(l - peak(t)) + alpha * bulk_t(l),
// where bulk_0 is a Marchenko-Pastur law of ratio alpha and scale sigma2,
// shifted by delta, and bulk_t is its push-forward through eigen_map.
struct SpectralLaw {
  double alpha = 0.1;
  double sigma2 = 1.0;
  double delta = 0.0;
  double peak0 = 0.0;
  double t = 0.0;

  [[nodiscard]] BulkSupport support0() const;
  [[nodiscard]] BulkSupport support() const;
  [[nodiscard]] double peak_location() const;
  [[nodiscard]] double peak_mass() const noexcept { return 1.0 - alpha; }
  [[nodiscard]] double bulk_mass() const noexcept { return alpha; }
  // Throws DomainError if the law is not integrable by this module.
  void validate() const;
};

using RealFunction = std::function<double(double)>;

// Large-M law for the setting; t must be finite.
SpectralLaw law_for(const ModelSetting& setting, double t);
// Law of the ground-truth (basic storing) coupling.
SpectralLaw storing_law(double alpha, double t);

// d(bulk_t)/dl; 0 outside the open support.
double bulk_density(const SpectralLaw& law, double lambda);

// Integral of f against the unit-mass bulk, via l = m + rho sin(theta) and
// Gauss-Legendre in theta.
double integrate_bulk(const SpectralLaw& law, const RealFunction& f,
                      const QuadratureOptions& opts = {});
// (1 - alpha) f(peak) + alpha * integrate_bulk(f).
double integrate_full(const SpectralLaw& law, const RealFunction& f,
                      const QuadratureOptions& opts = {});

// Bulk CDF and its inverse (bisection to `tol` on l).
double bulk_cdf(const SpectralLaw& law, double x, const QuadratureOptions& opts = {});
double bulk_quantile(const SpectralLaw& law, double u, double tol = 1e-10);
// W1 between a sample and the bulk law, matching sorted values to the
// quantiles at (k - 1/2)/n.
double wasserstein1_to_bulk(const SpectralLaw& law, std::span<const double> sample);

// Eigenvalue relation between the example-built and ground-truth couplings.
double se_supervised_map(double r, double t, double lambda);
double se_unsupervised_map(double alpha, double r, double t, double lambda);
// Large-N, large-M squared error (1/N)||J_zeta(t) - J_{s,u}(t)||_F^2.
double se_theory(Variant setting, double alpha, double r, double t,
                 const QuadratureOptions& opts = {});

struct CheckEntry {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct MomentCheckReport {
  std::vector<CheckEntry> entries;
  [[nodiscard]] bool passed() const;
};

// Checks the stability moments of a storing law against closed forms:
// mu1 = 1 + alpha, mu2 = alpha^2 + 3 alpha + 1 at t = 0 (tolerance 1e-6),
// and the 1/t^2 expansions for t > 0 (tolerances 10/t^3, 30/t^3).
MomentCheckReport mp_moment_checks(const SpectralLaw& law, const QuadratureOptions& opts = {});

}  // namespace dreamhop
