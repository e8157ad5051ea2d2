#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "dreamhop/coupling.hpp"
#include "dreamhop/errors.hpp"
#include "dreamhop/spectral_theory.hpp"

using namespace dreamhop;

namespace {

// Plain midpoint rule on the support, independent of the angle substitution.
double midpoint(const SpectralLaw& law, const RealFunction& f, int n = 400000) {
  const auto s = law.support();
  const double h = (s.upper - s.lower) / n;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double l = s.lower + (k + 0.5) * h;
    acc += f(l) * bulk_density(law, l);
  }
  return acc * h;
}

std::vector<SpectralLaw> sample_laws() {
  std::vector<SpectralLaw> laws;
  for (double a : {0.05, 0.3, 0.7}) {
    for (double t : {0.0, 1.0, 20.0}) {
      laws.push_back(storing_law(a, t));
      laws.push_back(law_for({Variant::Supervised, a, 0.6, 50}, t));
      laws.push_back(law_for({Variant::Unsupervised, a, 0.8, 50}, t));
    }
  }
  return laws;
}

}  // namespace

TEST(SpectralLaw, BulkIsNormalized) {
  for (const auto& law : sample_laws()) {
    EXPECT_NEAR(integrate_bulk(law, [](double) { return 1.0; }), 1.0, 1e-9);
    EXPECT_NEAR(integrate_full(law, [](double) { return 1.0; }), 1.0, 1e-9);
  }
}

TEST(SpectralLaw, DensityAgreesWithMidpointRule) {
  for (const auto& law : sample_laws()) {
    EXPECT_NEAR(midpoint(law, [](double) { return 1.0; }), 1.0, 2e-3);
    const double mean = integrate_bulk(law, [](double l) { return l; });
    EXPECT_NEAR(midpoint(law, [](double l) { return l; }), mean, 2e-3 * (1.0 + mean));
  }
}

TEST(SpectralLaw, PushForwardOfTheHebbianBulk) {
  for (double t : {0.5, 3.0, 40.0}) {
    const auto l0 = storing_law(0.2, 0.0);
    const auto lt = storing_law(0.2, t);
    auto f = [](double l) { return std::cos(3.0 * l) + l * l; };
    EXPECT_NEAR(integrate_bulk(lt, f), integrate_bulk(l0, [&](double l) { return f(eigen_map(l, t)); }), 1e-10);
    EXPECT_NEAR(lt.support().lower, eigen_map(l0.support0().lower, t), 1e-14);
    EXPECT_NEAR(lt.support().upper, eigen_map(l0.support0().upper, t), 1e-14);
  }
}

TEST(SpectralLaw, HebbianMoments) {
  for (double a : {0.1, 0.5, 1.0}) {
    const auto law = storing_law(a, 0.0);
    EXPECT_NEAR(integrate_full(law, [](double l) { return l; }), a, 1e-10);
    EXPECT_NEAR(integrate_full(law, [](double l) { return l * l; }), a * (1.0 + a), 1e-10);
    EXPECT_NEAR(integrate_bulk(law, [](double l) { return l * l * l; }), 1.0 + 3.0 * a + a * a, 1e-10);
    EXPECT_DOUBLE_EQ(law.support0().lower, (1.0 - std::sqrt(a)) * (1.0 - std::sqrt(a)));
    EXPECT_DOUBLE_EQ(law.support0().upper, (1.0 + std::sqrt(a)) * (1.0 + std::sqrt(a)));
    EXPECT_DOUBLE_EQ(law.peak_mass(), 1.0 - a);
  }
}

TEST(SpectralLaw, SquareRootEdge) {
  const auto law = storing_law(0.3, 2.0);
  const auto s = law.support();
  for (double edge : {s.lower, s.upper}) {
    const double sgn = edge == s.lower ? 1.0 : -1.0;
    const double e1 = 1e-6;
    const double e2 = 1e-8;
    const double slope = std::log(bulk_density(law, edge + sgn * e1) / bulk_density(law, edge + sgn * e2)) /
                         std::log(e1 / e2);
    EXPECT_NEAR(slope, 0.5, 0.05);
  }
  EXPECT_EQ(bulk_density(law, s.lower - 1e-3), 0.0);
  EXPECT_EQ(bulk_density(law, s.upper + 1e-3), 0.0);
}

TEST(SpectralLaw, QuantileInvertsCdf) {
  for (const auto& law : sample_laws()) {
    for (double u : {0.01, 0.25, 0.5, 0.9, 0.999}) {
      EXPECT_NEAR(bulk_cdf(law, bulk_quantile(law, u)), u, 1e-8);
    }
    EXPECT_EQ(bulk_cdf(law, law.support().lower - 1.0), 0.0);
    EXPECT_EQ(bulk_cdf(law, law.support().upper + 1.0), 1.0);
  }
}

TEST(SpectralLaw, WassersteinOfItsOwnQuantilesVanishes) {
  const auto law = law_for({Variant::Unsupervised, 0.2, 0.7, 10}, 5.0);
  const int n = 500;
  std::vector<double> sample;
  for (int k = n; k >= 1; --k) sample.push_back(bulk_quantile(law, (k - 0.5) / n));
  EXPECT_LT(wasserstein1_to_bulk(law, sample), 1e-8);
  std::vector<double> shifted = sample;
  for (double& v : shifted) v += 0.01;
  EXPECT_NEAR(wasserstein1_to_bulk(law, shifted), 0.01, 1e-8);
}

TEST(SpectralLaw, ExampleLawsAreScaledAndShifted) {
  const auto sup = law_for({Variant::Supervised, 0.2, 0.5, 30}, 0.0);
  const auto base = storing_law(0.2, 0.0);
  EXPECT_NEAR(sup.support0().upper, 0.25 * base.support0().upper, 1e-14);
  EXPECT_NEAR(sup.peak_location(), 0.0, 0.0);
  const auto uns = law_for({Variant::Unsupervised, 0.2, 0.5, 30}, 0.0);
  EXPECT_NEAR(uns.peak_location(), 0.2 * 0.75, 1e-15);
  EXPECT_NEAR(uns.support0().lower, 0.25 * base.support0().lower + 0.15, 1e-14);
  // Unsupervised bulk = scaled Hebbian bulk plus a constant.
  auto f = [](double l) { return l * l; };
  EXPECT_NEAR(integrate_bulk(uns, f), integrate_bulk(base, [](double l) {
                const double v = 0.25 * l + 0.15;
                return v * v;
              }),
              1e-10);
}

TEST(SeMaps, AreConjugatedEigenMaps) {
  // f^s = g_t(r^2 g_t^{-1}(l)), f^u = g_t(r^2 g_t^{-1}(l) + alpha (1 - r^2)).
  for (double t : {0.0, 0.7, 9.0}) {
    for (double r : {0.2, 0.9}) {
      for (double l : {0.0, 0.3, 1.0, 1.2}) {
        if (!(1.0 + t * (1.0 - l) > 0.0)) continue;
        const double x = eigen_map_inverse(l, t);
        EXPECT_NEAR(se_supervised_map(r, t, l), eigen_map(r * r * x, t), 1e-12);
        EXPECT_NEAR(se_unsupervised_map(0.3, r, t, l), eigen_map(r * r * x + 0.3 * (1 - r * r), t), 1e-12);
      }
    }
  }
  EXPECT_DOUBLE_EQ(se_supervised_map(1.0, 4.0, 0.8), 0.8);
  EXPECT_DOUBLE_EQ(se_unsupervised_map(0.2, 1.0, 4.0, 0.8), 0.8);
}

TEST(SeTheory, ClosedFormsAtZeroTime) {
  for (double a : {0.1, 0.4}) {
    for (double r : {0.3, 0.8}) {
      const double q = (1.0 - r * r) * (1.0 - r * r);
      EXPECT_NEAR(se_theory(Variant::Supervised, a, r, 0.0), q * a * (1.0 + a), 1e-10);
      EXPECT_NEAR(se_theory(Variant::Unsupervised, a, r, 0.0), q * a, 1e-10);
    }
  }
}

TEST(SeTheory, VanishesForPerfectExamples) {
  for (double t : {0.0, 1.0, 100.0}) {
    EXPECT_NEAR(se_theory(Variant::Supervised, 0.2, 1.0, t), 0.0, 1e-14);
    EXPECT_NEAR(se_theory(Variant::Unsupervised, 0.2, 1.0, t), 0.0, 1e-14);
  }
  EXPECT_THROW(se_theory(Variant::BasicStoring, 0.2, 0.5, 0.0), DomainError);
  EXPECT_THROW(se_theory(Variant::Supervised, 0.2, 1.5, 0.0), DomainError);
}

TEST(MomentChecks, PassForAdaptiveQuadrature) {
  for (double a : {0.05, 0.2, 0.5}) {
    for (double t : {0.0, 50.0, 100.0}) EXPECT_TRUE(mp_moment_checks(storing_law(a, t)).passed()) << a << " " << t;
  }
  EXPECT_THROW(mp_moment_checks(law_for({Variant::Supervised, 0.1, 0.5, 10}, 0.0)), DomainError);
}

TEST(MomentChecks, FailForACoarseRule) {
  QuadratureOptions coarse;
  coarse.initial_nodes = 4;
  coarse.adaptive = false;
  EXPECT_FALSE(mp_moment_checks(storing_law(0.3, 0.0), coarse).passed());
}

TEST(SpectralLaw, ValidateRejectsBadParameters) {
  EXPECT_THROW(storing_law(0.0, 1.0), DomainError);
  EXPECT_THROW(storing_law(1.2, 1.0), DomainError);
  EXPECT_THROW(storing_law(0.2, -1.0), DomainError);
  EXPECT_THROW(storing_law(0.2, kProjectorTime), DomainError);
  EXPECT_THROW(law_for({Variant::Supervised, 0.2, 0.0, 10}, 0.0), DomainError);
  EXPECT_THROW(law_for({Variant::Unsupervised, 0.2, -0.1, 10}, 0.0), DomainError);
}
