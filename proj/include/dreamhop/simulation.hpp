#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dreamhop/coupling.hpp"
#include "dreamhop/data_gen.hpp"
#include "dreamhop/rng.hpp"
#include "dreamhop/setting.hpp"

namespace dreamhop {

struct DynamicsState {
  BinaryConfig config;
  int step = 0;
};

// sigma_i -> sign(sum_j J_ij sigma_j), with sign(0) = +1.
BinaryConfig one_step(const CouplingMatrix& j, const BinaryConfig& sigma);

// n parallel updates. Exploratory only: no theoretical prediction exists
// beyond the first step. Returns the trajectory including the start.
std::vector<DynamicsState> run_dynamics(const CouplingMatrix& j, const BinaryConfig& sigma, int steps);

// Delta_i(sigma) = sigma_i sum_j J_ij sigma_j.
Eigen::VectorXd stability_field(const CouplingMatrix& j, const BinaryConfig& sigma);
// Delta_i(x, sigma) = x_i sum_j J_ij sigma_j.
Eigen::VectorXd attractiveness_field(const CouplingMatrix& j, const BinaryConfig& x,
                                     const BinaryConfig& sigma);

struct FieldStats {
  double mean = 0.0;
  double second_moment = 0.0;
  double third_central = 0.0;
};

FieldStats field_stats(const Eigen::Ref<const Eigen::VectorXd>& delta);

struct TrialResult {
  double m0 = 0.0;
  double m1 = 0.0;
  FieldStats field;
};

// One probe: local fields h = J sigma are given, x is the reference.
TrialResult evaluate_probe(const Eigen::Ref<const Eigen::VectorXd>& fields, const BinaryConfig& x,
                           const BinaryConfig& sigma);

struct RetrievalConfig {
  Variant setting = Variant::BasicStoring;
  Index neurons = 1000;
  double alpha = 0.1;
  double quality = 1.0;           // r; probes of (un)supervised runs share it
  Index per_class = 1;            // M
  std::vector<double> times{0.0};
  std::vector<double> probe_overlaps{1.0};  // p grid, storing only
  Index datasets = 100;           // disorder realizations
  Index probes_per_dataset = 4;   // probe draws nested in each realization
  bool zero_diagonal = false;
  RngSpec rng;
  unsigned threads = 0;                        // 0: hardware concurrency
  std::size_t memory_limit_bytes = std::size_t{4} << 30;

  [[nodiscard]] Index patterns() const;
  void validate() const;
  // Peak bytes held by one realization in flight.
  [[nodiscard]] std::size_t bytes_per_realization() const;
};

struct AggregatedTrials {
  Index samples = 0;
  double m0_mean = 0.0;
  double m0_stderr = 0.0;
  double m1_mean = 0.0;
  double m1_stderr = 0.0;
  // Variance of per-realization means and mean within-realization variance of m1.
  double m1_between_var = 0.0;
  double m1_within_var = 0.0;
  FieldStats field;  // averaged over all probes
};

struct RetrievalGrid {
  std::vector<double> times;
  std::vector<double> overlaps;
  std::vector<AggregatedTrials> cells;  // index: time * overlaps.size() + overlap

  [[nodiscard]] const AggregatedTrials& at(std::size_t time, std::size_t overlap) const {
    return cells[time * overlaps.size() + overlap];
  }
};

// Monte Carlo retrieval: for each realization, fresh patterns (or ground
// truths and M examples), then fresh probes on an independent stream:
// ball perturbations of a stored pattern (storing) or test examples
// chi * zeta of quality r (supervised/unsupervised). Realizations run in
// parallel; the reduction is in realization order, so results do not
// depend on the thread count.
RetrievalGrid run_retrieval_trials(const RetrievalConfig& config);

// (1/N) ||J_zeta(t) - J_{s,u}(t)||_F^2.
double se_empirical(const GroundTruthSet& gt, const ExampleSet& ex, Variant setting, double t);

struct SeConfig {
  Variant setting = Variant::Supervised;
  Index neurons = 1000;
  double alpha = 0.1;
  double quality = 0.5;
  Index per_class = 100;
  std::vector<double> times{0.0};
  Index realizations = 20;
  RngSpec rng;
};

struct SeEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// One entry per time, averaged over realizations.
std::vector<SeEstimate> run_se_trials(const SeConfig& config);

struct SpectrumConfig {
  Variant setting = Variant::BasicStoring;
  Index neurons = 1000;
  double alpha = 0.1;
  double quality = 1.0;
  Index per_class = 1;
  double time = 0.0;
  int bins = 100;
  double peak_tol = 1e-6;
  Index realizations = 1;
  RngSpec rng;
};

struct SpectrumHistogram {
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // normalized: sum density * width = 1
  double peak_mass = 0.0;       // fraction within peak_tol of the predicted peak
  double w1_bulk = 0.0;         // top alpha*N eigenvalues against the bulk law
  Index zero_count = 0;         // |l| < 1e-10
  std::vector<double> eigenvalues;  // ascending, all realizations pooled
};

SpectrumHistogram empirical_spectrum_histogram(const SpectrumConfig& config);

}  // namespace dreamhop
