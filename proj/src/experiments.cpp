#include "dreamhop/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "dreamhop/errors.hpp"
#include "dreamhop/retrieval_theory.hpp"
#include "dreamhop/simulation.hpp"
#include "dreamhop/spectral_theory.hpp"

namespace dreamhop {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) v[static_cast<std::size_t>(k)] = n == 1 ? lo : lo + (hi - lo) * k / (n - 1);
  return v;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Short form for file names: 0.1 -> "0.1", 10 -> "10".
std::string tag(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

bool wants(const ExperimentConfig& c, std::string_view panel) { return c.panel.empty() || c.panel == panel; }

// Stream id of one simulated parameter point, so that every point has its
// own disorder and adding points to a grid leaves the others unchanged.
RngSpec point_rng(const ExperimentConfig& c, std::uint64_t figure, std::uint64_t a, std::uint64_t b = 0,
                  std::uint64_t d = 0) {
  return RngSpec{c.seed, figure}.child(a).child(b).child(d);
}

std::uint64_t key(double v) { return static_cast<std::uint64_t>(std::llround(v * 1e6)); }

RetrievalConfig retrieval_base(const ExperimentConfig& c) {
  RetrievalConfig rc;
  rc.neurons = c.neurons;
  rc.datasets = c.trials;
  rc.probes_per_dataset = c.probes_per_trial;
  rc.zero_diagonal = c.zero_diagonal;
  rc.threads = c.threads;
  if (auto mem = available_memory()) rc.memory_limit_bytes = *mem / 2;
  return rc;
}

// ---- fig1: limiting densities with empirical histograms ------------------

void fig1(const ExperimentConfig& c, std::vector<PanelResult>& out) {
  struct Row {
    std::string name;
    Variant variant;
  };
  const std::vector<Row> rows{{"storing", Variant::BasicStoring},
                              {"supervised", Variant::Supervised},
                              {"unsupervised", Variant::Unsupervised}};
  for (const auto& row : rows) {
    if (!wants(c, row.name)) continue;
    // The storing row varies alpha; the others fix alpha and vary r.
    const bool storing = row.variant == Variant::BasicStoring;
    const std::vector<double> outer = storing ? c.alphas : c.qualities;
    for (std::size_t oi = 0; oi < outer.size(); ++oi) {
      for (double t : c.times) {
        const auto start = Clock::now();
        const double alpha = storing ? outer[oi] : c.alphas.front();
        const double r = storing ? 1.0 : outer[oi];
        const Index m = storing ? 1 : c.per_class.front();
        const ModelSetting setting{row.variant, alpha, r, m};
        const SpectralLaw law = law_for(setting, t);
        const auto s = law.support();

        PanelResult p;
        p.name = "fig1_" + row.name + "_a" + tag(alpha) + (storing ? "" : "_r" + tag(r)) + "_t" + tag(t);
        p.params = {{"alpha", alpha}, {"r", r}, {"t", t}, {"M", static_cast<double>(m)},
                    {"peak_location", law.peak_location()}, {"peak_mass", law.peak_mass()}};
        p.x_label = "lambda";
        const double width = (s.upper - s.lower) / c.bins;

        std::vector<double> counts(static_cast<std::size_t>(c.bins), 0.0);
        double total = 0.0;
        if (c.simulate) {
          SpectrumConfig sc;
          sc.setting = row.variant;
          sc.neurons = c.neurons;
          sc.alpha = alpha;
          sc.quality = r;
          sc.per_class = m;
          sc.time = t;
          sc.bins = c.bins;
          sc.realizations = c.trials;
          sc.rng = point_rng(c, 1, static_cast<std::uint64_t>(row.variant), key(outer[oi]), key(t));
          const auto h = empirical_spectrum_histogram(sc);
          total = static_cast<double>(h.eigenvalues.size());
          for (double l : h.eigenvalues) {
            if (l < s.lower || l >= s.upper) continue;
            const auto b = std::min<std::size_t>(counts.size() - 1, static_cast<std::size_t>((l - s.lower) / width));
            counts[b] += 1.0;
          }
          p.params.emplace_back("w1_bulk", h.w1_bulk);
          p.params.emplace_back("empirical_peak_mass", h.peak_mass);
        }
        for (int b = 0; b < c.bins; ++b) {
          ResultRecord rec;
          rec.x = s.lower + (b + 0.5) * width;
          rec.theory = law.bulk_mass() * bulk_density(law, rec.x);
          if (c.simulate) {
            const double dens = counts[static_cast<std::size_t>(b)] / (total * width);
            rec.sim_mean = dens;
            rec.sim_stderr = std::sqrt(counts[static_cast<std::size_t>(b)]) / (total * width);
          }
          p.rows.push_back(rec);
        }
        p.runtime_seconds = seconds_since(start);
        out.push_back(std::move(p));
      }
    }
  }
}

// ---- fig2: squared error vs r --------------------------------------------

void fig2(const ExperimentConfig& c, std::vector<PanelResult>& out) {
  for (Variant v : {Variant::Supervised, Variant::Unsupervised}) {
    const std::string name = to_string(v);
    if (!wants(c, name)) continue;
    for (double alpha : c.alphas) {
      for (Index m : c.per_class) {
        const auto start = Clock::now();
        // sims[r][t]
        std::vector<std::vector<SeEstimate>> sims;
        if (c.simulate) {
          for (double r : c.qualities) {
            SeConfig sc;
            sc.setting = v;
            sc.neurons = c.neurons;
            sc.alpha = alpha;
            sc.quality = r;
            sc.per_class = m;
            sc.times = c.times;
            sc.realizations = c.trials;
            sc.rng = point_rng(c, 2, static_cast<std::uint64_t>(v), key(alpha), key(r)).child(static_cast<std::uint64_t>(m));
            sims.push_back(run_se_trials(sc));
          }
        }
        const double elapsed = seconds_since(start) / static_cast<double>(c.times.size());
        for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
          const double t = c.times[ti];
          PanelResult p;
          p.name = "fig2_" + name + "_t" + tag(t) + "_a" + tag(alpha) + "_M" + std::to_string(m);
          p.params = {{"alpha", alpha}, {"t", t}, {"M", static_cast<double>(m)}};
          p.x_label = "r";
          for (std::size_t ri = 0; ri < c.qualities.size(); ++ri) {
            ResultRecord rec;
            rec.x = c.qualities[ri];
            rec.theory = se_theory(v, alpha, rec.x, t);
            if (c.simulate) {
              rec.sim_mean = sims[ri][ti].mean;
              rec.sim_stderr = sims[ri][ti].std_error;
            }
            p.rows.push_back(rec);
          }
          p.runtime_seconds = elapsed;
          out.push_back(std::move(p));
        }
      }
    }
  }
}

// ---- fig3: storing stability and attractiveness -------------------------

void fig3(const ExperimentConfig& c, std::vector<PanelResult>& out) {
  if (wants(c, "stability")) {
    const auto start = Clock::now();
    std::vector<RetrievalGrid> sims;
    if (c.simulate) {
      for (double alpha : c.alphas) {
        RetrievalConfig rc = retrieval_base(c);
        rc.setting = Variant::BasicStoring;
        rc.alpha = alpha;
        rc.times = c.times;
        rc.probe_overlaps = {1.0};
        rc.rng = point_rng(c, 3, 0, key(alpha));
        sims.push_back(run_retrieval_trials(rc));
      }
    }
    const double elapsed = seconds_since(start) / static_cast<double>(c.times.size());
    for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
      const double t = c.times[ti];
      PanelResult p;
      p.name = "fig3_stability_t" + tag(t);
      p.params = {{"t", t}, {"p", 1.0}};
      p.x_label = "alpha";
      const auto curve = predict_curve(ScenarioKind::StoringStability, 0.0, t, c.alphas);
      for (std::size_t ai = 0; ai < c.alphas.size(); ++ai) {
        ResultRecord rec{curve[ai].x, curve[ai].m1, std::nullopt, std::nullopt, curve[ai].ga_bound};
        if (c.simulate) {
          rec.sim_mean = sims[ai].at(ti, 0).m1_mean;
          rec.sim_stderr = sims[ai].at(ti, 0).m1_stderr;
        }
        p.rows.push_back(rec);
      }
      p.runtime_seconds = elapsed;
      out.push_back(std::move(p));
    }
  }
  if (wants(c, "attractiveness")) {
    for (double alpha : c.alphas) {
      const auto start = Clock::now();
      std::optional<RetrievalGrid> sim;
      if (c.simulate) {
        RetrievalConfig rc = retrieval_base(c);
        rc.setting = Variant::BasicStoring;
        rc.alpha = alpha;
        rc.times = c.times;
        rc.probe_overlaps = c.overlaps;
        rc.rng = point_rng(c, 3, 1, key(alpha));
        sim = run_retrieval_trials(rc);
      }
      const double elapsed = seconds_since(start) / static_cast<double>(c.times.size());
      for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
        const double t = c.times[ti];
        PanelResult p;
        p.name = "fig3_attractiveness_a" + tag(alpha) + "_t" + tag(t);
        p.params = {{"alpha", alpha}, {"t", t}};
        p.x_label = "p";
        const auto curve = predict_curve(ScenarioKind::StoringAttractiveness, alpha, t, c.overlaps);
        for (std::size_t pi = 0; pi < c.overlaps.size(); ++pi) {
          ResultRecord rec{curve[pi].x, curve[pi].m1, std::nullopt, std::nullopt, curve[pi].ga_bound};
          if (sim) {
            rec.sim_mean = sim->at(ti, pi).m1_mean;
            rec.sim_stderr = sim->at(ti, pi).m1_stderr;
          }
          p.rows.push_back(rec);
        }
        p.runtime_seconds = elapsed;
        out.push_back(std::move(p));
      }
    }
  }
}

// ---- fig4: ground-truth attractiveness from test examples ---------------

void fig4(const ExperimentConfig& c, std::vector<PanelResult>& out) {
  for (Variant v : {Variant::Supervised, Variant::Unsupervised}) {
    const std::string name = to_string(v);
    if (!wants(c, name)) continue;
    const auto kind =
        v == Variant::Supervised ? ScenarioKind::SupervisedAttractiveness : ScenarioKind::UnsupervisedAttractiveness;
    const Index m = c.per_class.front();
    for (double alpha : c.alphas) {
      const auto start = Clock::now();
      std::vector<RetrievalGrid> sims;
      if (c.simulate) {
        for (double r : c.qualities) {
          RetrievalConfig rc = retrieval_base(c);
          rc.setting = v;
          rc.alpha = alpha;
          rc.quality = r;
          rc.per_class = m;
          rc.times = c.times;
          rc.rng = point_rng(c, 4, static_cast<std::uint64_t>(v), key(alpha), key(r));
          sims.push_back(run_retrieval_trials(rc));
        }
      }
      const double elapsed = seconds_since(start) / static_cast<double>(c.times.size());
      for (std::size_t ti = 0; ti < c.times.size(); ++ti) {
        const double t = c.times[ti];
        PanelResult p;
        p.name = "fig4_" + name + "_a" + tag(alpha) + "_t" + tag(t);
        p.params = {{"alpha", alpha}, {"t", t}, {"M", static_cast<double>(m)}};
        p.x_label = "r";
        const auto curve = predict_curve(kind, alpha, t, c.qualities);
        for (std::size_t ri = 0; ri < c.qualities.size(); ++ri) {
          ResultRecord rec{curve[ri].x, curve[ri].m1, std::nullopt, std::nullopt, curve[ri].ga_bound};
          if (c.simulate) {
            rec.sim_mean = sims[ri].at(ti, 0).m1_mean;
            rec.sim_stderr = sims[ri].at(ti, 0).m1_stderr;
          }
          p.rows.push_back(rec);
        }
        p.runtime_seconds = elapsed;
        out.push_back(std::move(p));
      }
    }
  }
}

// Rough single-core cost model, calibrated on a desk machine. Only used to
// refuse runs that would take hours.
constexpr double kSecondsPerSpin = 4e-9;
constexpr double kSecondsPerFlop = 5e-10;
constexpr double kSecondsPerEigenCube = 4e-9;

double eigen_seconds(double n) { return kSecondsPerEigenCube * n * n * n; }

double retrieval_seconds(Variant v, double n, double alpha, double m, std::size_t times, double probes,
                         bool dreaming) {
  const double p = alpha * n;
  const double k = v == Variant::Unsupervised ? p * m : p;
  double s = kSecondsPerSpin * (p * n + (v == Variant::BasicStoring ? 0.0 : p * m * n) + probes * n);
  if (v == Variant::Unsupervised) s += kSecondsPerFlop * n * n * k / 64.0;
  if (dreaming) s += eigen_seconds(std::min(k, n)) + kSecondsPerFlop * n * std::min(k, n) * std::min(k, n);
  s += kSecondsPerFlop * 2.0 * n * std::min(k, n) * probes * static_cast<double>(times);
  return s;
}

bool any_dreaming(const std::vector<double>& times) {
  return std::any_of(times.begin(), times.end(), [](double t) { return t != 0.0; });
}

}  // namespace

ExperimentConfig default_config(std::string_view id) {
  ExperimentConfig c;
  c.id = std::string(id);
  if (id == "fig1") {
    c.alphas = {0.1, 0.3, 0.5};
    c.qualities = {0.3, 0.6, 0.9};
    c.times = {0.0, 1.0, 10.0};
    c.per_class = {200};
    c.neurons = 1000;
    c.trials = 5;
    c.figure_inferred = true;
  } else if (id == "fig2") {
    c.alphas = {0.1, 0.2, 0.3};
    c.qualities = linspace(0.1, 1.0, 10);
    c.times = {0.0, 1.0, 10.0};
    c.per_class = {50, 100, 200};
    c.neurons = 1000;
    c.trials = 20;
    c.figure_inferred = true;
  } else if (id == "fig3") {
    c.alphas = linspace(0.05, 0.5, 10);
    c.times = {0.0, 1.0, 10.0};
    c.overlaps = linspace(0.0, 1.0, 21);
    c.neurons = 5000;
    c.trials = 100;
    c.probes_per_trial = 1;
    c.figure_inferred = true;
  } else if (id == "fig4") {
    c.alphas = {0.1, 0.2, 0.3};
    c.qualities = linspace(0.1, 1.0, 10);
    c.times = {0.0, 10.0};
    c.per_class = {1000};
    c.neurons = 1000;
    c.trials = 100;
    c.probes_per_trial = 1;
    c.figure_inferred = true;
  } else {
    throw DomainError("unknown experiment id: " + std::string(id));
  }
  c.output_dir = default_output_dir();
  return c;
}

void validate(const ExperimentConfig& c) {
  static const std::map<std::string, std::vector<std::string>> panels{
      {"fig1", {"storing", "supervised", "unsupervised"}},
      {"fig2", {"supervised", "unsupervised"}},
      {"fig3", {"stability", "attractiveness"}},
      {"fig4", {"supervised", "unsupervised"}}};
  const auto it = panels.find(c.id);
  if (it == panels.end()) throw DomainError("experiment id must be one of fig1, fig2, fig3, fig4");
  if (!c.panel.empty() && std::find(it->second.begin(), it->second.end(), c.panel) == it->second.end()) {
    throw DomainError("unknown panel '" + c.panel + "' for " + c.id);
  }
  auto in01 = [](const std::vector<double>& v, const char* what, bool open_low) {
    for (double x : v) {
      if (!(x <= 1.0 && (open_low ? x > 0.0 : x >= 0.0))) {
        throw DomainError(std::string(what) + " values must lie in " + (open_low ? "(0,1]" : "[0,1]"));
      }
    }
  };
  in01(c.alphas, "alpha", true);
  in01(c.qualities, "r", false);
  in01(c.overlaps, "p", false);
  for (double t : c.times) {
    if (!(t >= 0.0) || std::isinf(t)) throw DomainError("t values must be finite and >= 0");
  }
  for (Index m : c.per_class) {
    if (m < 1) throw DomainError("M values must be >= 1");
  }
  if (c.neurons < 1 || c.trials < 1 || c.probes_per_trial < 1) throw DomainError("N, trials and probes must be >= 1");
  if (c.bins < 1 || c.grid_points < 2) throw DomainError("bins must be >= 1 and grid points >= 2");
  if (c.times.empty()) throw DomainError("empty t grid");
  const bool needs_r = c.id == "fig2" || c.id == "fig4" || (c.id == "fig1" && c.panel != "storing");
  const bool needs_m = c.id == "fig2" || c.id == "fig4" || (c.id == "fig1" && c.panel != "storing");
  if (c.alphas.empty()) throw DomainError("empty alpha grid");
  if (needs_r && c.qualities.empty()) throw DomainError("empty r grid");
  if (needs_m && c.per_class.empty()) throw DomainError("empty M grid");
  if (c.id == "fig3" && wants(c, "attractiveness") && c.overlaps.empty()) throw DomainError("empty p grid");
  if (c.id == "fig4") {
    for (double r : c.qualities) {
      if (r == 0.0) throw DomainError("fig4: r = 0 has no theoretical prediction");
    }
  }
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"id", c.id},
          {"panel", c.panel},
          {"alpha", c.alphas},
          {"r", c.qualities},
          {"t", c.times},
          {"p", c.overlaps},
          {"M", c.per_class},
          {"N", c.neurons},
          {"trials", c.trials},
          {"probes_per_trial", c.probes_per_trial},
          {"grid_points", c.grid_points},
          {"bins", c.bins},
          {"seed", c.seed},
          {"simulate", c.simulate},
          {"zero_diagonal", c.zero_diagonal},
          {"svg", c.svg},
          {"force", c.force},
          {"threads", c.threads},
          {"max_runtime_seconds", c.max_runtime_seconds},
          {"output_dir", c.output_dir.string()},
          {"figure_inferred", c.figure_inferred}};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.id = j.at("id").get<std::string>();
  c.panel = j.value("panel", "");
  c.alphas = j.value("alpha", std::vector<double>{});
  c.qualities = j.value("r", std::vector<double>{});
  c.times = j.value("t", std::vector<double>{});
  c.overlaps = j.value("p", std::vector<double>{});
  c.per_class = j.value("M", std::vector<Index>{});
  c.neurons = j.value("N", c.neurons);
  c.trials = j.value("trials", c.trials);
  c.probes_per_trial = j.value("probes_per_trial", c.probes_per_trial);
  c.grid_points = j.value("grid_points", c.grid_points);
  c.bins = j.value("bins", c.bins);
  c.seed = j.value("seed", c.seed);
  c.simulate = j.value("simulate", c.simulate);
  c.zero_diagonal = j.value("zero_diagonal", c.zero_diagonal);
  c.svg = j.value("svg", c.svg);
  c.force = j.value("force", c.force);
  c.threads = j.value("threads", c.threads);
  c.max_runtime_seconds = j.value("max_runtime_seconds", c.max_runtime_seconds);
  c.output_dir = j.value("output_dir", std::string("."));
  c.figure_inferred = j.value("figure_inferred", false);
  return c;
}

std::optional<std::size_t> available_memory() {
  std::ifstream in("/proc/meminfo");
  std::string name;
  std::size_t kb = 0;
  std::string unit;
  while (in >> name >> kb >> unit) {
    if (name == "MemAvailable:") return kb * 1024;
  }
  return std::nullopt;
}

ResourceEstimate estimate_resources(const ExperimentConfig& c) {
  ResourceEstimate e;
  const double n = static_cast<double>(c.neurons);
  const double trials = static_cast<double>(c.trials);
  const double dense = 8.0 * n * n;
  const double m_max =
      c.per_class.empty() ? 1.0 : static_cast<double>(*std::max_element(c.per_class.begin(), c.per_class.end()));
  const double a_max = c.alphas.empty() ? 0.0 : *std::max_element(c.alphas.begin(), c.alphas.end());
  double bytes = 3.0 * dense;
  if (c.id != "fig3") bytes += a_max * n * m_max * n;  // int8 examples
  e.peak_bytes = static_cast<std::size_t>(bytes);
  if (!c.simulate) return e;

  double s = 0.0;
  const double probes = static_cast<double>(c.probes_per_trial);
  if (c.id == "fig1") {
    const std::size_t outer_storing = c.alphas.size() * c.times.size();
    const std::size_t outer_other = c.qualities.size() * c.times.size();
    if (wants(c, "storing")) s += static_cast<double>(outer_storing) * trials * eigen_seconds(n);
    for (Variant v : {Variant::Supervised, Variant::Unsupervised}) {
      if (!wants(c, to_string(v))) continue;
      const double a = c.alphas.front();
      s += static_cast<double>(outer_other) * trials *
           (eigen_seconds(n) + retrieval_seconds(v, n, a, m_max, 0, 0, false));
    }
  } else if (c.id == "fig2") {
    for (Variant v : {Variant::Supervised, Variant::Unsupervised}) {
      if (!wants(c, to_string(v))) continue;
      for (double a : c.alphas) {
        for (Index m : c.per_class) {
          const double k = v == Variant::Unsupervised ? a * n * static_cast<double>(m) : a * n;
          const double one = retrieval_seconds(v, n, a, static_cast<double>(m), 0, 0, false) +
                             2.0 * (eigen_seconds(std::min(k, n)) + kSecondsPerFlop * n * n * std::min(k, n)) +
                             kSecondsPerFlop * 2.0 * n * n * static_cast<double>(c.times.size());
          s += static_cast<double>(c.qualities.size()) * trials * one;
        }
      }
    }
  } else if (c.id == "fig3") {
    const bool dreaming = any_dreaming(c.times);
    if (wants(c, "stability")) {
      for (double a : c.alphas) {
        s += trials * retrieval_seconds(Variant::BasicStoring, n, a, 1, c.times.size(), probes, dreaming);
      }
    }
    if (wants(c, "attractiveness")) {
      const double cols = probes * static_cast<double>(c.overlaps.size());
      for (double a : c.alphas) {
        s += trials * retrieval_seconds(Variant::BasicStoring, n, a, 1, c.times.size(), cols, dreaming);
      }
    }
  } else if (c.id == "fig4") {
    const bool dreaming = any_dreaming(c.times);
    for (Variant v : {Variant::Supervised, Variant::Unsupervised}) {
      if (!wants(c, to_string(v))) continue;
      for (double a : c.alphas) {
        s += static_cast<double>(c.qualities.size()) * trials *
             retrieval_seconds(v, n, a, m_max, c.times.size(), probes, dreaming);
      }
    }
  }
  e.seconds = s;
  return e;
}

void check_resources(const ExperimentConfig& c) {
  if (c.force) return;
  const auto est = estimate_resources(c);
  const auto mem = available_memory();
  const bool memory_ok = !mem || est.peak_bytes <= *mem;
  const bool time_ok = est.seconds <= c.max_runtime_seconds;
  if (memory_ok && time_ok) return;

  // Halve N (memory) and then trials (runtime) until the estimate fits.
  ExperimentConfig smaller = c;
  for (int k = 0; k < 64; ++k) {
    const auto e = estimate_resources(smaller);
    const bool m_ok = !mem || e.peak_bytes <= *mem;
    if (m_ok && e.seconds <= c.max_runtime_seconds) break;
    if (!m_ok || smaller.trials <= 4) {
      if (smaller.neurons <= 16) break;
      smaller.neurons /= 2;
    } else {
      smaller.trials = std::max<Index>(1, smaller.trials / 2);
    }
  }
  std::ostringstream msg;
  msg << "refusing " << c.id << ": estimated " << est.seconds / 60.0 << " min and "
      << static_cast<double>(est.peak_bytes) / (1 << 20) << " MiB";
  if (mem) msg << " (available " << static_cast<double>(*mem) / (1 << 20) << " MiB)";
  msg << ", budget " << c.max_runtime_seconds / 60.0 << " min. Try --N " << smaller.neurons << " --trials "
      << smaller.trials << ", --no-sim for theory only, or --force.";
  throw ResourceError(msg.str());
}

std::vector<PanelResult> run_experiment(const ExperimentConfig& config) {
  validate(config);
  std::vector<PanelResult> out;
  if (config.id == "fig1") fig1(config, out);
  if (config.id == "fig2") fig2(config, out);
  if (config.id == "fig3") fig3(config, out);
  if (config.id == "fig4") fig4(config, out);
  return out;
}

std::string csv_header() { return "x,theory,sim_mean,sim_stderr,ga_bound\n"; }

std::string to_csv(const PanelResult& panel) {
  std::string s = csv_header();
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (const auto& r : panel.rows) {
    s += fmt(r.x) + ',' + fmt(r.theory) + ',' + opt(r.sim_mean) + ',' + opt(r.sim_stderr) + ',' + opt(r.ga_bound) +
         '\n';
  }
  return s;
}

std::string to_svg(const PanelResult& panel) {
  constexpr double W = 480;
  constexpr double H = 320;
  constexpr double pad = 40;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& r : panel.rows) {
    x0 = std::min(x0, r.x);
    x1 = std::max(x1, r.x);
    for (const std::optional<double>& y : {std::optional<double>(r.theory), r.sim_mean}) {
      if (y && std::isfinite(*y)) {
        y0 = std::min(y0, *y);
        y1 = std::max(y1, *y);
      }
    }
  }
  if (!(x1 > x0)) x1 = x0 + 1;
  if (!(y1 > y0)) y1 = y0 + 1;
  auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
  auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << W - 2 * pad << "\" height=\"" << H - 2 * pad
    << "\" fill=\"none\" stroke=\"#888\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"12\">" << panel.name << "</text>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"11\">" << panel.x_label
    << " [" << x0 << ", " << x1 << "]  y [" << y0 << ", " << y1 << "]</text>\n";
  s << "<polyline fill=\"none\" stroke=\"black\" points=\"";
  for (const auto& r : panel.rows) s << px(r.x) << ',' << py(r.theory) << ' ';
  s << "\"/>\n";
  for (const auto& r : panel.rows) {
    if (!r.sim_mean) continue;
    s << "<circle cx=\"" << px(r.x) << "\" cy=\"" << py(*r.sim_mean) << "\" r=\"3\" fill=\"#c33\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string git_blob_sha1(std::string_view content) {
  const std::string head = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("git_blob_sha1: cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("git_blob_sha1: digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace

ReproduceOutput reproduce(const ExperimentConfig& config) {
  validate(config);
  check_resources(config);
  const auto start = Clock::now();
  const auto panels = run_experiment(config);
  std::filesystem::create_directories(config.output_dir);

  ReproduceOutput out;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& p : panels) {
    const std::string csv = to_csv(p);
    const auto path = config.output_dir / (p.name + ".csv");
    write_text(path, csv);
    out.files.push_back(path);
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : p.params) params[k] = v;
    files.push_back({{"file", path.filename().string()},
                     {"x", p.x_label},
                     {"params", params},
                     {"rows", p.rows.size()},
                     {"sha1", git_blob_sha1(csv)},
                     {"runtime_seconds", p.runtime_seconds}});
    if (config.svg) {
      const auto svg = config.output_dir / (p.name + ".svg");
      write_text(svg, to_svg(p));
      out.files.push_back(svg);
    }
  }
  nlohmann::json meta{{"schema_version", kResultSchemaVersion},
                      {"experiment", config.id},
                      {"columns", {"x", "theory", "sim_mean", "sim_stderr", "ga_bound"}},
                      {"config", to_json(config)},
                      {"figure_inferred", config.figure_inferred},
                      {"files", files},
                      {"runtime_seconds", seconds_since(start)}};
  out.metadata = config.output_dir / (config.id + (config.panel.empty() ? "" : "_" + config.panel) + ".json");
  write_text(out.metadata, meta.dump(2) + '\n');
  return out;
}

void write_metadata(const std::filesystem::path& csv_path, const nlohmann::json& config,
                    std::string_view csv_content, double runtime_seconds) {
  nlohmann::json meta{{"schema_version", kResultSchemaVersion},
                      {"file", csv_path.filename().string()},
                      {"config", config},
                      {"sha1", git_blob_sha1(csv_content)},
                      {"runtime_seconds", runtime_seconds}};
  auto side = csv_path;
  side += ".json";
  write_text(side, meta.dump(2) + '\n');
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return ".";
}

}  // namespace dreamhop
