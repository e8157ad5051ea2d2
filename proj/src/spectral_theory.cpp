#include "dreamhop/spectral_theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dreamhop/coupling.hpp"
#include "dreamhop/errors.hpp"

namespace dreamhop {

BulkSupport SpectralLaw::support0() const {
  const double s = std::sqrt(alpha);
  return {sigma2 * (1.0 - s) * (1.0 - s) + delta, sigma2 * (1.0 + s) * (1.0 + s) + delta};
}

BulkSupport SpectralLaw::support() const {
  const auto s0 = support0();
  return {eigen_map(s0.lower, t), eigen_map(s0.upper, t)};
}

double SpectralLaw::peak_location() const { return eigen_map(peak0, t); }

void SpectralLaw::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("spectral law: alpha must lie in (0,1]");
  if (!(sigma2 > 0.0)) throw DomainError("spectral law: degenerate bulk (sigma^2 = 0, r = 0)");
  if (!(delta >= 0.0) || !(peak0 >= 0.0)) throw DomainError("spectral law: negative shift");
  if (!(t >= 0.0) || std::isinf(t)) throw DomainError("spectral law: t must be finite and >= 0");
  // The density pole sits at eigen_map(delta); it must not enter the support.
  if (support0().lower - delta < 0.0) throw DomainError("spectral law: pole inside the bulk support");
}

SpectralLaw law_for(const ModelSetting& setting, double t) {
  setting.validate();
  SpectralLaw law;
  law.alpha = setting.alpha;
  law.t = t;
  switch (setting.variant) {
    case Variant::BasicStoring: break;
    case Variant::Supervised: law.sigma2 = setting.quality * setting.quality; break;
    case Variant::Unsupervised: {
      const double r2 = setting.quality * setting.quality;
      law.sigma2 = r2;
      law.delta = law.peak0 = setting.alpha * (1.0 - r2);
      break;
    }
  }
  law.validate();
  return law;
}

SpectralLaw storing_law(double alpha, double t) {
  return law_for(ModelSetting{Variant::BasicStoring, alpha, 1.0, 1}, t);
}

double bulk_density(const SpectralLaw& law, double lambda) {
  law.validate();
  const auto s0 = law.support0();
  const auto s = law.support();
  if (!(lambda > s.lower && lambda < s.upper)) return 0.0;
  const double t = law.t;
  const double d = 1.0 + t * (1.0 - lambda);
  const double pole_term = (1.0 + t * law.delta) * lambda - (1.0 + t) * law.delta;
  return (1.0 + t) / (2.0 * std::numbers::pi * law.sigma2) *
         std::sqrt((1.0 + t * s0.lower) * (1.0 + t * s0.upper)) / (d * d) *
         std::sqrt((s.upper - lambda) * (lambda - s.lower)) / (law.alpha * pole_term);
}

namespace {

// Bulk measure in the angle phi in [0, pi], l = lower + rho (1 - cos phi).
// The square-root edge factors cancel against dl/dphi, leaving a smooth
// weight.
class BulkAngleMeasure {
 public:
  explicit BulkAngleMeasure(const SpectralLaw& law) : t_(law.t) {
    law.validate();
    const auto s0 = law.support0();
    const auto s = law.support();
    lower_ = s.lower;
    rho_ = 0.5 * (s.upper - s.lower);
    // lower - eigen_map(delta), without cancellation.
    const double sq = 1.0 - std::sqrt(law.alpha);
    gap_ = (1.0 + t_) * law.sigma2 * sq * sq / ((1.0 + t_ * s0.lower) * (1.0 + t_ * law.delta));
    prefactor_ = (1.0 + t_) / (2.0 * std::numbers::pi * law.sigma2) *
                 std::sqrt((1.0 + t_ * s0.lower) * (1.0 + t_ * s0.upper)) /
                 (law.alpha * (1.0 + t_ * law.delta));
  }

  [[nodiscard]] double lambda(double phi) const {
    const double s = std::sin(0.5 * phi);
    return lower_ + 2.0 * rho_ * s * s;
  }

  [[nodiscard]] double weight(double phi) const {
    const double s = std::sin(0.5 * phi);
    const double c = std::cos(0.5 * phi);
    const double above = 2.0 * rho_ * s * s;
    const double l = lower_ + above;
    const double d = 1.0 + t_ * (1.0 - l);
    const double root = 2.0 * rho_ * s * c;
    return prefactor_ / (d * d) * root * root / (gap_ + above);
  }

  [[nodiscard]] double phi_of(double x) const {
    if (rho_ <= 0.0) return x < lower_ ? 0.0 : std::numbers::pi;
    const double c = std::clamp(1.0 - (x - lower_) / rho_, -1.0, 1.0);
    return std::acos(c);
  }

  [[nodiscard]] double lower() const noexcept { return lower_; }
  [[nodiscard]] double upper() const noexcept { return lower_ + 2.0 * rho_; }

 private:
  double t_;
  double lower_ = 0.0;
  double rho_ = 0.0;
  double gap_ = 0.0;
  double prefactor_ = 0.0;
};

double fixed_rule(const BulkAngleMeasure& m, const RealFunction& f, double phi0, double phi1, int n) {
  const auto& rule = gauss_legendre(n);
  const double half = 0.5 * (phi1 - phi0);
  const double mid = 0.5 * (phi1 + phi0);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double phi = mid + half * rule.nodes[k];
    const double l = m.lambda(phi);
    const double v = f(l);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "integrate_bulk: integrand is not finite at node " << k << " (lambda = " << l
          << ", value = " << v << ")";
      throw NumericalError(msg.str());
    }
    sum += rule.weights[k] * v * m.weight(phi);
  }
  return sum * half;
}

double adaptive_rule(const BulkAngleMeasure& m, const RealFunction& f, double phi0, double phi1,
                     const QuadratureOptions& opts) {
  int n = std::max(1, opts.initial_nodes);
  double estimate = fixed_rule(m, f, phi0, phi1, n);
  if (!opts.adaptive) return estimate;
  while (2 * n <= opts.max_nodes) {
    n *= 2;
    const double refined = fixed_rule(m, f, phi0, phi1, n);
    const bool converged = std::abs(refined - estimate) <= opts.rel_tol * std::abs(refined);
    estimate = refined;
    if (converged) break;
  }
  return estimate;
}

}  // namespace

double integrate_bulk(const SpectralLaw& law, const RealFunction& f, const QuadratureOptions& opts) {
  const BulkAngleMeasure m(law);
  return adaptive_rule(m, f, 0.0, std::numbers::pi, opts);
}

double integrate_full(const SpectralLaw& law, const RealFunction& f, const QuadratureOptions& opts) {
  const double peak = f(law.peak_location());
  if (!std::isfinite(peak)) throw NumericalError("integrate_full: integrand is not finite at the peak");
  return law.peak_mass() * peak + law.bulk_mass() * integrate_bulk(law, f, opts);
}

double bulk_cdf(const SpectralLaw& law, double x, const QuadratureOptions& opts) {
  const BulkAngleMeasure m(law);
  if (x <= m.lower()) return 0.0;
  if (x >= m.upper()) return 1.0;
  return adaptive_rule(m, [](double) { return 1.0; }, 0.0, m.phi_of(x), opts);
}

double bulk_quantile(const SpectralLaw& law, double u, double tol) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("bulk_quantile: u must lie in [0,1]");
  const auto s = law.support();
  double lo = s.lower;
  double hi = s.upper;
  QuadratureOptions opts;
  opts.initial_nodes = 64;
  opts.rel_tol = 1e-12;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (bulk_cdf(law, mid, opts) < u) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double wasserstein1_to_bulk(const SpectralLaw& law, std::span<const double> sample) {
  if (sample.empty()) throw DomainError("wasserstein1_to_bulk: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const double u = (static_cast<double>(k) + 0.5) / n;
    sum += std::abs(sorted[k] - bulk_quantile(law, u, 1e-10));
  }
  return sum / n;
}

double se_supervised_map(double r, double t, double lambda) {
  const double r2 = r * r;
  return lambda * r2 * (t + 1.0) / (lambda * (r2 - 1.0) * t + t + 1.0);
}

double se_unsupervised_map(double alpha, double r, double t, double lambda) {
  const double r2m1 = r * r - 1.0;
  const double num = (t + 1.0) * (lambda * r * r + alpha * r2m1 * ((lambda - 1.0) * t - 1.0));
  const double den = lambda * r2m1 * t * (alpha * t + 1.0) - alpha * r2m1 * (t + 1.0) * t + t + 1.0;
  return num / den;
}

double se_theory(Variant setting, double alpha, double r, double t, const QuadratureOptions& opts) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("se_theory: r must lie in [0,1]");
  const SpectralLaw gt_law = storing_law(alpha, t);
  switch (setting) {
    case Variant::Supervised:
      return integrate_full(gt_law, [=](double l) {
        const double d = l - se_supervised_map(r, t, l);
        return d * d;
      }, opts);
    case Variant::Unsupervised:
      return integrate_full(gt_law, [=](double l) {
        const double d = l - se_unsupervised_map(alpha, r, t, l);
        return d * d;
      }, opts);
    case Variant::BasicStoring: break;
  }
  throw DomainError("se_theory: defined for the supervised and unsupervised settings only");
}

bool MomentCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const CheckEntry& e) { return e.passed; });
}

MomentCheckReport mp_moment_checks(const SpectralLaw& law, const QuadratureOptions& opts) {
  if (law.sigma2 != 1.0 || law.delta != 0.0 || law.peak0 != 0.0) {
    throw DomainError("mp_moment_checks: expects a basic-storing law");
  }
  const double a = law.alpha;
  const double t = law.t;
  const double mu1 = integrate_full(law, [t](double l) { return l * l / (1.0 + t * (1.0 - l)); }, opts) / a;
  const double mu2 =
      integrate_full(law, [t](double l) { return l * l * l / (1.0 + t * (1.0 - l)); }, opts) / a;
  MomentCheckReport report;
  auto add = [&](std::string name, double value, double expected, double tol) {
    report.entries.push_back({std::move(name), value, expected, tol, std::abs(value - expected) < tol});
  };
  if (t == 0.0) {
    add("mu1 = 1 + alpha", mu1, 1.0 + a, 1e-6);
    add("mu2 = alpha^2 + 3 alpha + 1", mu2, a * a + 3.0 * a + 1.0, 1e-6);
  } else {
    const double t3 = t * t * t;
    add("mu1 large-t expansion", mu1, 1.0 - a / ((a - 1.0) * t * t), 10.0 / t3);
    add("mu2 large-t expansion", mu2, 1.0 - 3.0 * a / ((a - 1.0) * t * t), 30.0 / t3);
  }
  return report;
}

}  // namespace dreamhop
