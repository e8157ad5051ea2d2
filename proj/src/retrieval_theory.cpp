#include "dreamhop/retrieval_theory.hpp"

#include <cmath>

#include "dreamhop/errors.hpp"

namespace dreamhop {

RetrievalScenario make_scenario(ScenarioKind kind, double alpha, double t, double overlap) {
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw DomainError("scenario: p and r must lie in [0,1]");
  RetrievalScenario s;
  s.kind = kind;
  switch (kind) {
    case ScenarioKind::StoringStability:
      s.overlap = 1.0;
      s.law = storing_law(alpha, t);
      break;
    case ScenarioKind::StoringAttractiveness:
      s.overlap = overlap;
      s.law = storing_law(alpha, t);
      break;
    case ScenarioKind::SupervisedAttractiveness:
    case ScenarioKind::UnsupervisedAttractiveness:
      if (overlap == 0.0) throw DomainError("scenario: r = 0 makes the first moment singular");
      s.overlap = overlap;
      s.law = law_for(ModelSetting{kind == ScenarioKind::SupervisedAttractiveness ? Variant::Supervised
                                                                                  : Variant::Unsupervised,
                                   alpha, overlap, 1},
                      t);
      break;
  }
  return s;
}

MomentPair moments(const RetrievalScenario& scenario, const QuadratureOptions& opts) {
  const SpectralLaw& law = scenario.law;
  const double a = law.alpha;
  const double t = law.t;
  const auto upper = law.support().upper;
  if (!(1.0 + t * (1.0 - upper) > 0.0)) throw NumericalError("moments: 1 + t(1 - l) vanishes on the support");

  auto second = [&] { return integrate_full(law, [](double l) { return l * l; }, opts); };
  auto quad_resolvent = [&] {
    return integrate_full(law, [t](double l) { return l * l / (1.0 + t * (1.0 - l)); }, opts);
  };
  auto cubic_resolvent = [&] {
    return integrate_full(law, [t](double l) { return l * l * l / (1.0 + t * (1.0 - l)); }, opts);
  };

  switch (scenario.kind) {
    case ScenarioKind::StoringStability:
      return {quad_resolvent() / a, cubic_resolvent() / a};
    case ScenarioKind::StoringAttractiveness: {
      const double p = scenario.overlap;
      const double s1 = quad_resolvent() / a;
      const double s2 = cubic_resolvent() / a;
      return {p * s1, (1.0 - p * p) * second() + p * p * s2};
    }
    case ScenarioKind::SupervisedAttractiveness: {
      const double r = scenario.overlap;
      if (r == 0.0) throw DomainError("moments: r = 0");
      return {quad_resolvent() / (a * r), (1.0 - r * r) * second() + cubic_resolvent() / a};
    }
    case ScenarioKind::UnsupervisedAttractiveness: {
      const double r = scenario.overlap;
      if (r == 0.0) throw DomainError("moments: r = 0");
      const double first = integrate_full(law, [](double l) { return l; }, opts);
      return {quad_resolvent() / (a * r) - (1.0 - r * r) / r * first, cubic_resolvent() / a};
    }
  }
  throw DomainError("moments: unknown scenario");
}

MagnetizationPrediction m1_theory(const MomentPair& m) {
  const double var = m.variance();
  if (!(var > 0.0)) {
    const double sign = m.mu1 > 0.0 ? 1.0 : (m.mu1 < 0.0 ? -1.0 : 0.0);
    return {sign, true};
  }
  return {std::erf(m.mu1 / std::sqrt(2.0 * var)), false};
}

double ga_validity_bound(const SpectralLaw& law, double p, double alpha, const QuadratureOptions& opts) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("ga_validity_bound: p must lie in [0,1]");
  const double factor = 2.0 * alpha * p * (1.0 - p * p);
  if (factor == 0.0) return 0.0;
  return factor * integrate_full(law, [](double l) { return l * l; }, opts);
}

std::vector<CurvePoint> predict_curve(ScenarioKind kind, double alpha, double t,
                                      const std::vector<double>& grid, double ga_threshold) {
  std::vector<CurvePoint> rows;
  rows.reserve(grid.size());
  for (const double x : grid) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("predict_curve: grid values must lie in [0,1]");
    CurvePoint row;
    row.x = x;
    RetrievalScenario sc;
    if (kind == ScenarioKind::StoringStability) {
      sc = make_scenario(kind, x, t);
      row.m0 = 1.0;
    } else {
      sc = make_scenario(kind, alpha, t, x);
      row.m0 = x;
    }
    const auto pred = m1_theory(moments(sc));
    row.m1 = pred.m1;
    row.degenerate_variance = pred.degenerate_variance;
    row.ga_bound = ga_validity_bound(sc.law, sc.overlap, sc.law.alpha);
    row.ga_flagged = row.ga_bound > ga_threshold;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dreamhop
