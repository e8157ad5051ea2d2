#include "dreamhop/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "dreamhop/errors.hpp"
#include "dreamhop/spectral_theory.hpp"

namespace dreamhop {

namespace {

void check_sizes(const CouplingMatrix& j, Index n) {
  if (j.size() != n) throw ShapeError("coupling and configuration sizes differ");
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased; 0 for a single value
};

MeanVar mean_var(const std::vector<double>& v) {
  MeanVar out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    for (double x : v) out.var += (x - out.mean) * (x - out.mean);
    out.var /= static_cast<double>(v.size() - 1);
  }
  return out;
}

unsigned worker_count(unsigned requested, std::size_t limit, std::size_t per_task, Index tasks) {
  unsigned n = requested ? requested : std::max(1U, std::thread::hardware_concurrency());
  const std::size_t by_memory = std::max<std::size_t>(1, limit / std::max<std::size_t>(1, per_task));
  n = static_cast<unsigned>(std::min<std::size_t>(n, by_memory));
  return static_cast<unsigned>(std::max<Index>(1, std::min<Index>(n, tasks)));
}

// Runs task(i) for i in [0, count) on `threads` workers; rethrows the
// first failure.
template <typename Task>
void parallel_for(Index count, unsigned threads, Task task) {
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (Index i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (threads <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

InformationMatrix realization_information(Variant setting, const GroundTruthSet& gt, Index m, double r,
                                          const RngSpec& rng) {
  if (setting == Variant::BasicStoring) return build_information_matrix(gt);
  return build_information_matrix(make_examples(gt, m, r, rng), setting);
}

}  // namespace

BinaryConfig one_step(const CouplingMatrix& j, const BinaryConfig& sigma) {
  check_sizes(j, sigma.size());
  return BinaryConfig::sign_of(j.matrix * sigma.as_vector());
}

std::vector<DynamicsState> run_dynamics(const CouplingMatrix& j, const BinaryConfig& sigma, int steps) {
  if (steps < 0) throw DomainError("run_dynamics: steps must be >= 0");
  std::vector<DynamicsState> path{{sigma, 0}};
  for (int n = 1; n <= steps; ++n) path.push_back({one_step(j, path.back().config), n});
  return path;
}

Eigen::VectorXd stability_field(const CouplingMatrix& j, const BinaryConfig& sigma) {
  return attractiveness_field(j, sigma, sigma);
}

Eigen::VectorXd attractiveness_field(const CouplingMatrix& j, const BinaryConfig& x,
                                     const BinaryConfig& sigma) {
  check_sizes(j, sigma.size());
  check_sizes(j, x.size());
  return x.as_vector().cwiseProduct(j.matrix * sigma.as_vector());
}

FieldStats field_stats(const Eigen::Ref<const Eigen::VectorXd>& delta) {
  FieldStats s;
  if (delta.size() == 0) return s;
  const double n = static_cast<double>(delta.size());
  s.mean = delta.sum() / n;
  s.second_moment = delta.squaredNorm() / n;
  s.third_central = (delta.array() - s.mean).cube().sum() / n;
  return s;
}

TrialResult evaluate_probe(const Eigen::Ref<const Eigen::VectorXd>& fields, const BinaryConfig& x,
                           const BinaryConfig& sigma) {
  const Index n = fields.size();
  if (x.size() != n || sigma.size() != n) throw ShapeError("evaluate_probe: size mismatch");
  Eigen::VectorXd delta(n);
  long long agree = 0;
  for (Index i = 0; i < n; ++i) {
    delta[i] = x[i] * fields[i];
    const int next = fields[i] >= 0.0 ? 1 : -1;
    agree += next * x[i];
  }
  return {overlap(x, sigma), static_cast<double>(agree) / static_cast<double>(n), field_stats(delta)};
}

Index RetrievalConfig::patterns() const {
  return std::max<Index>(1, static_cast<Index>(std::llround(alpha * static_cast<double>(neurons))));
}

void RetrievalConfig::validate() const {
  ModelSetting{setting, alpha, quality, per_class}.validate();
  if (neurons < 1) throw DomainError("retrieval: N must be >= 1");
  if (patterns() > neurons) throw DomainError("retrieval: P exceeds N");
  if (datasets < 1 || probes_per_dataset < 1) throw DomainError("retrieval: need at least one trial");
  if (times.empty()) throw DomainError("retrieval: empty time list");
  for (double p : probe_overlaps) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("retrieval: probe overlaps must lie in [0,1]");
  }
  if (setting == Variant::BasicStoring && probe_overlaps.empty()) {
    throw DomainError("retrieval: empty probe overlap grid");
  }
}

std::size_t RetrievalConfig::bytes_per_realization() const {
  const auto n = static_cast<std::size_t>(neurons);
  const auto p = static_cast<std::size_t>(patterns());
  const auto m = setting == Variant::BasicStoring ? 1 : static_cast<std::size_t>(per_class);
  const std::size_t dense = 8 * n * n;
  const std::size_t modes = 8 * n * std::min(n, p * m);
  const std::size_t examples = setting == Variant::BasicStoring ? 0 : p * m * n;
  return 2 * dense + modes + examples + 8 * p * n;
}

RetrievalGrid run_retrieval_trials(const RetrievalConfig& config) {
  config.validate();
  const Index n = config.neurons;
  const Index p = config.patterns();
  const bool storing = config.setting == Variant::BasicStoring;
  const std::vector<double> overlaps = storing ? config.probe_overlaps : std::vector<double>{config.quality};
  const std::size_t n_times = config.times.size();
  const std::size_t n_over = overlaps.size();
  const Index probes = config.probes_per_dataset;

  // results[d][cell][k]
  std::vector<std::vector<std::vector<TrialResult>>> results(static_cast<std::size_t>(config.datasets));

  auto realization = [&](Index d) {
    const RngSpec rs = config.rng.child(static_cast<std::uint64_t>(d));
    const GroundTruthSet gt = make_ground_truths(n, p, rs.child(0));
    const InformationMatrix info =
        realization_information(config.setting, gt, config.per_class, config.quality, rs.child(1));

    // Probes live on their own stream, independent of the training data.
    const RngSpec probe_rng = rs.child(2);
    std::vector<BinaryConfig> refs;
    std::vector<BinaryConfig> starts;
    Eigen::MatrixXd s(n, static_cast<Index>(n_over) * probes);
    for (std::size_t o = 0; o < n_over; ++o) {
      for (Index k = 0; k < probes; ++k) {
        const Index col = static_cast<Index>(o) * probes + k;
        BinaryConfig ref = gt.pattern(k % p);
        BinaryConfig start = perturb_on_ball(ref, overlaps[o], probe_rng.child(static_cast<std::uint64_t>(col)));
        s.col(col) = start.as_vector();
        refs.push_back(std::move(ref));
        starts.push_back(std::move(start));
      }
    }

    std::optional<DreamingKernel> kernel;
    auto& out = results[static_cast<std::size_t>(d)];
    out.assign(n_times * n_over, {});
    for (std::size_t ti = 0; ti < n_times; ++ti) {
      const double t = config.times[ti];
      // The spectral form never costs more than twice a dense product and
      // skips forming J(t).
      CouplingOperator op = [&] {
        if (t == 0.0) return CouplingOperator::hebbian(info);
        if (!kernel) kernel.emplace(info);
        return CouplingOperator::spectral(*kernel, t);
      }();
      Eigen::MatrixXd h = op.apply(s);
      if (config.zero_diagonal) h -= op.diagonal().asDiagonal() * s;
      for (std::size_t o = 0; o < n_over; ++o) {
        auto& cell = out[ti * n_over + o];
        for (Index k = 0; k < probes; ++k) {
          const Index col = static_cast<Index>(o) * probes + k;
          cell.push_back(evaluate_probe(h.col(col), refs[static_cast<std::size_t>(col)],
                                        starts[static_cast<std::size_t>(col)]));
        }
      }
    }
  };

  parallel_for(config.datasets,
               worker_count(config.threads, config.memory_limit_bytes, config.bytes_per_realization(),
                            config.datasets),
               realization);

  RetrievalGrid grid{config.times, overlaps, {}};
  for (std::size_t c = 0; c < n_times * n_over; ++c) {
    AggregatedTrials agg;
    std::vector<double> all_m1;
    std::vector<double> all_m0;
    std::vector<double> dataset_means;
    double within = 0.0;
    for (const auto& per_dataset : results) {
      std::vector<double> m1s;
      for (const auto& tr : per_dataset[c]) {
        m1s.push_back(tr.m1);
        all_m1.push_back(tr.m1);
        all_m0.push_back(tr.m0);
        agg.field.mean += tr.field.mean;
        agg.field.second_moment += tr.field.second_moment;
        agg.field.third_central += tr.field.third_central;
      }
      const auto mv = mean_var(m1s);
      dataset_means.push_back(mv.mean);
      within += mv.var;
    }
    agg.samples = static_cast<Index>(all_m1.size());
    const double count = static_cast<double>(agg.samples);
    agg.field.mean /= count;
    agg.field.second_moment /= count;
    agg.field.third_central /= count;
    const auto m1 = mean_var(all_m1);
    const auto m0 = mean_var(all_m0);
    const auto between = mean_var(dataset_means);
    agg.m1_mean = m1.mean;
    agg.m0_mean = m0.mean;
    agg.m1_between_var = between.var;
    agg.m1_within_var = within / static_cast<double>(results.size());
    const double d = static_cast<double>(results.size());
    agg.m1_stderr = results.size() > 1 ? std::sqrt(between.var / d) : std::sqrt(m1.var / count);
    agg.m0_stderr = std::sqrt(m0.var / count);
    grid.cells.push_back(agg);
  }
  return grid;
}

double se_empirical(const GroundTruthSet& gt, const ExampleSet& ex, Variant setting, double t) {
  if (ex.classes != gt.count() || ex.size() != gt.size()) throw ShapeError("se_empirical: shape mismatch");
  if (setting == Variant::BasicStoring) throw DomainError("se_empirical: needs an example-based setting");
  const auto reference = build_coupling(build_information_matrix(gt), t);
  const auto empirical = build_coupling(build_information_matrix(ex, setting), t);
  return (reference.matrix - empirical.matrix).squaredNorm() / static_cast<double>(gt.size());
}

std::vector<SeEstimate> run_se_trials(const SeConfig& config) {
  ModelSetting{config.setting, config.alpha, config.quality, config.per_class}.validate();
  if (config.setting == Variant::BasicStoring) throw DomainError("run_se_trials: needs an example-based setting");
  if (config.realizations < 1) throw DomainError("run_se_trials: need at least one realization");
  const Index n = config.neurons;
  const Index p = std::max<Index>(1, static_cast<Index>(std::llround(config.alpha * static_cast<double>(n))));
  std::vector<std::vector<double>> values(config.times.size());
  for (Index d = 0; d < config.realizations; ++d) {
    const RngSpec rs = config.rng.child(static_cast<std::uint64_t>(d));
    const GroundTruthSet gt = make_ground_truths(n, p, rs.child(0));
    const InformationMatrix gt_info = build_information_matrix(gt);
    const InformationMatrix ex_info =
        build_information_matrix(make_examples(gt, config.per_class, config.quality, rs.child(1)), config.setting);
    std::optional<DreamingKernel> gt_kernel;
    std::optional<DreamingKernel> ex_kernel;
    for (std::size_t ti = 0; ti < config.times.size(); ++ti) {
      const double t = config.times[ti];
      Eigen::MatrixXd diff;
      if (t == 0.0) {
        diff = gt_info.hebbian() - ex_info.hebbian();
      } else {
        if (!gt_kernel) gt_kernel.emplace(gt_info);
        if (!ex_kernel) ex_kernel.emplace(ex_info);
        diff = gt_kernel->coupling(t).matrix - ex_kernel->coupling(t).matrix;
      }
      values[ti].push_back(diff.squaredNorm() / static_cast<double>(n));
    }
  }
  std::vector<SeEstimate> out;
  for (const auto& v : values) {
    const auto mv = mean_var(v);
    out.push_back({mv.mean, std::sqrt(mv.var / static_cast<double>(v.size()))});
  }
  return out;
}

SpectrumHistogram empirical_spectrum_histogram(const SpectrumConfig& config) {
  const ModelSetting setting{config.setting, config.alpha, config.quality, config.per_class};
  setting.validate();
  if (config.bins < 1) throw DomainError("spectrum histogram: bins must be >= 1");
  const Index n = config.neurons;
  const Index p = std::max<Index>(1, static_cast<Index>(std::llround(config.alpha * static_cast<double>(n))));
  if (p > n) throw DomainError("spectrum histogram: P exceeds N");
  const SpectralLaw law = law_for(setting, config.time);
  const double peak = law.peak_location();

  SpectrumHistogram out;
  std::vector<double> bulk;
  Index near_peak = 0;
  for (Index d = 0; d < config.realizations; ++d) {
    const RngSpec rs = config.rng.child(static_cast<std::uint64_t>(d));
    const GroundTruthSet gt = make_ground_truths(n, p, rs.child(0));
    const InformationMatrix info =
        realization_information(config.setting, gt, config.per_class, config.quality, rs.child(1));
    const Eigen::VectorXd values = spectrum(build_coupling(info, config.time)).values;
    for (Index i = 0; i < n; ++i) {
      const double l = values[i];
      out.eigenvalues.push_back(l);
      if (std::abs(l) < kZeroEigenvalueTol) ++out.zero_count;
      if (std::abs(l - peak) <= config.peak_tol) ++near_peak;
      if (i >= n - p) bulk.push_back(l);
    }
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  const double total = static_cast<double>(out.eigenvalues.size());
  out.peak_mass = static_cast<double>(near_peak) / total;
  out.w1_bulk = wasserstein1_to_bulk(law, bulk);

  const double lo = out.eigenvalues.front();
  const double hi = std::max(out.eigenvalues.back(), lo + 1e-12);
  const double width = (hi - lo) / config.bins;
  out.edges.resize(static_cast<std::size_t>(config.bins) + 1);
  for (int b = 0; b <= config.bins; ++b) out.edges[static_cast<std::size_t>(b)] = lo + b * width;
  out.density.assign(static_cast<std::size_t>(config.bins), 0.0);
  for (double l : out.eigenvalues) {
    const auto b = std::min<std::size_t>(static_cast<std::size_t>(config.bins) - 1,
                                         static_cast<std::size_t>((l - lo) / width));
    out.density[b] += 1.0;
  }
  for (auto& v : out.density) v /= total * width;
  return out;
}

}  // namespace dreamhop
