// Command-line front end: coupling, theory, retrieval, simulate, reproduce, verify.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dreamhop/coupling.hpp"
#include "dreamhop/data_gen.hpp"
#include "dreamhop/errors.hpp"
#include "dreamhop/experiments.hpp"
#include "dreamhop/retrieval_theory.hpp"
#include "dreamhop/simulation.hpp"
#include "dreamhop/spectral_theory.hpp"
#include "dreamhop/verification.hpp"

using namespace dreamhop;
using json = nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_time(const std::string& s) {
  if (s == "inf" || s == "infinity") return kProjectorTime;
  std::size_t used = 0;
  const double t = std::stod(s, &used);
  if (used != s.size()) throw DomainError("cannot parse t = '" + s + "'");
  return t;
}

// "p=0:1:0.02" -> name "p", values 0, 0.02, ..., 1.
std::pair<std::string, std::vector<double>> parse_sweep(const std::string& sweep) {
  const auto eq = sweep.find('=');
  if (eq == std::string::npos) throw DomainError("sweep must look like name=start:stop:step");
  std::vector<double> parts;
  std::stringstream ss(sweep.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
    throw DomainError("sweep must look like name=start:stop:step with step > 0");
  }
  const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
  std::vector<double> v;
  for (long k = 0; k < count; ++k) v.push_back(std::min(parts[1], parts[0] + static_cast<double>(k) * parts[2]));
  return {sweep.substr(0, eq), v};
}

std::filesystem::path resolve_out(const std::string& out) {
  std::filesystem::path p(out);
  if (p.is_relative() && !p.has_parent_path()) p = default_output_dir() / p;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p;
}

void write_csv(const std::filesystem::path& path, const std::string& text, const json& config, double seconds) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  f.close();
  write_metadata(path, config, text, seconds);
  std::cout << "wrote " << path.string() << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point s) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - s).count();
}

// Options shared by the model-building subcommands.
struct ModelOptions {
  std::string setting = "storing";
  Index neurons = 1000;
  double alpha = 0.1;
  double quality = 1.0;
  Index per_class = 100;
  std::uint64_t seed = 1;

  void add(CLI::App* app) {
    app->add_option("--setting", setting, "storing | supervised | unsupervised")->capture_default_str();
    app->add_option("--N", neurons, "number of neurons")->capture_default_str();
    app->add_option("--alpha", alpha, "load P/N")->capture_default_str();
    app->add_option("--r", quality, "example quality")->capture_default_str();
    app->add_option("--M", per_class, "examples per class")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
  }
  [[nodiscard]] Variant variant() const { return parse_variant(setting); }
  [[nodiscard]] Index patterns() const {
    return std::max<Index>(1, static_cast<Index>(std::llround(alpha * static_cast<double>(neurons))));
  }
  [[nodiscard]] json to_json() const {
    return {{"setting", setting}, {"N", neurons}, {"alpha", alpha}, {"r", quality}, {"M", per_class}, {"seed", seed}};
  }
};

ScenarioKind parse_scenario(const std::string& s) {
  if (s == "stability") return ScenarioKind::StoringStability;
  if (s == "storing" || s == "attractiveness") return ScenarioKind::StoringAttractiveness;
  if (s == "supervised") return ScenarioKind::SupervisedAttractiveness;
  if (s == "unsupervised") return ScenarioKind::UnsupervisedAttractiveness;
  throw DomainError("scenario must be stability, storing, supervised or unsupervised");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dreaming Hopfield couplings: spectral theory, retrieval theory and Monte Carlo checks"};
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags take precedence");
  app.require_subcommand(1);

  // ---- coupling build ----
  auto* coupling = app.add_subcommand("coupling", "Build and dump coupling matrices");
  coupling->require_subcommand(1);
  auto* build = coupling->add_subcommand("build", "Generate data, build J(t), write a float64 dump");
  ModelOptions build_opts;
  build_opts.add(build);
  std::string build_t = "0";
  std::string build_out = "coupling.bin";
  std::string build_dataset;
  build->add_option("--t", build_t, "dreaming time (or 'inf')")->capture_default_str();
  build->add_option("--out", build_out, "output path")->capture_default_str();
  build->add_option("--dataset-out", build_dataset, "also dump the generated dataset here");

  // ---- theory density ----
  auto* theory = app.add_subcommand("theory", "Limiting spectral law");
  theory->require_subcommand(1);
  auto* density = theory->add_subcommand("density", "Bulk density on a grid over the support");
  std::string dens_setting = "storing";
  double dens_alpha = 0.1, dens_r = 1.0, dens_t = 0.0;
  int dens_grid = 200;
  std::string dens_out = "density.csv";
  density->add_option("--setting", dens_setting)->capture_default_str();
  density->add_option("--alpha", dens_alpha)->capture_default_str();
  density->add_option("--r", dens_r)->capture_default_str();
  density->add_option("--t", dens_t)->capture_default_str();
  density->add_option("--grid", dens_grid, "number of grid points")->capture_default_str();
  density->add_option("--out", dens_out)->capture_default_str();

  // ---- retrieval theory ----
  auto* retrieval = app.add_subcommand("retrieval", "One-step retrieval under the Gaussian approximation");
  retrieval->require_subcommand(1);
  auto* rtheory = retrieval->add_subcommand("theory", "m1 curve over a sweep");
  std::string r_scenario = "storing";
  double r_alpha = 0.1, r_t = 0.0, r_threshold = kDefaultGaThreshold;
  std::string r_sweep = "p=0:1:0.02";
  std::string r_out = "retrieval_theory.csv";
  rtheory->add_option("--scenario", r_scenario, "stability | storing | supervised | unsupervised")
      ->capture_default_str();
  rtheory->add_option("--alpha", r_alpha)->capture_default_str();
  rtheory->add_option("--t", r_t)->capture_default_str();
  rtheory->add_option("--sweep", r_sweep, "name=start:stop:step over p, r or alpha")->capture_default_str();
  rtheory->add_option("--ga-threshold", r_threshold, "flag rows whose GA bound exceeds this")->capture_default_str();
  rtheory->add_option("--out", r_out)->capture_default_str();

  // ---- simulate ----
  auto* simulate = app.add_subcommand("simulate", "Finite-N Monte Carlo");
  simulate->require_subcommand(1);
  ModelOptions sim_opts;
  std::vector<double> sim_t{0.0};
  std::vector<double> sim_p{1.0};
  Index sim_trials = 100, sim_probes = 4;
  int sim_bins = 100, sim_steps = 5;
  bool sim_zero_diag = false;
  unsigned sim_threads = 0;
  std::string sim_out = "results.csv";
  auto add_sim = [&](CLI::App* sub) {
    sim_opts.add(sub);
    sub->add_option("--t", sim_t, "dreaming times")->delimiter(',')->capture_default_str();
    sub->add_option("--trials", sim_trials, "disorder realizations")->capture_default_str();
    sub->add_option("--out", sim_out)->capture_default_str();
  };
  auto* sim_retrieval = simulate->add_subcommand("retrieval", "m1 over realizations and probes");
  add_sim(sim_retrieval);
  sim_retrieval->add_option("--p", sim_p, "probe overlaps (storing)")->delimiter(',')->capture_default_str();
  sim_retrieval->add_option("--probes", sim_probes, "probes per realization")->capture_default_str();
  sim_retrieval->add_flag("--zero-diagonal", sim_zero_diag, "drop self-interactions");
  sim_retrieval->add_option("--threads", sim_threads, "worker threads (0: all cores)")->capture_default_str();
  auto* sim_spectrum = simulate->add_subcommand("spectrum", "Eigenvalue histogram against the limiting law");
  add_sim(sim_spectrum);
  sim_spectrum->add_option("--bins", sim_bins)->capture_default_str();
  auto* sim_se = simulate->add_subcommand("se", "Squared error between example and ground-truth couplings");
  add_sim(sim_se);
  auto* sim_dyn = simulate->add_subcommand("dynamics", "Exploratory n-step parallel dynamics (no theory)");
  add_sim(sim_dyn);
  sim_dyn->add_option("--p", sim_p, "probe overlap")->delimiter(',')->capture_default_str();
  sim_dyn->add_option("--steps", sim_steps)->capture_default_str();

  // ---- reproduce ----
  auto* repro = app.add_subcommand("reproduce", "Regenerate figure data (fig1..fig4)");
  std::string fig_id;
  std::string panel;
  std::vector<double> f_alpha, f_r, f_t, f_p;
  std::vector<Index> f_m;
  Index f_n = 0, f_trials = 0, f_probes = 0;
  std::uint64_t f_seed = 1;
  bool no_sim = false, svg = false, force = false;
  unsigned f_threads = 0;
  double f_max_runtime = 0.0;
  std::string f_outdir, from_meta;
  repro->add_option("figure", fig_id, "fig1 | fig2 | fig3 | fig4");
  repro->add_option("--panel,--row", panel, "subset of the figure");
  repro->add_option("--alpha", f_alpha)->delimiter(',');
  repro->add_option("--r", f_r)->delimiter(',');
  repro->add_option("--t", f_t)->delimiter(',');
  repro->add_option("--p", f_p)->delimiter(',');
  repro->add_option("--M", f_m)->delimiter(',');
  repro->add_option("--N", f_n);
  repro->add_option("--trials", f_trials);
  repro->add_option("--probes", f_probes);
  repro->add_option("--seed", f_seed)->capture_default_str();
  repro->add_option("--threads", f_threads);
  repro->add_option("--max-runtime", f_max_runtime, "runtime budget in seconds");
  repro->add_option("--out-dir", f_outdir, "output directory");
  repro->add_option("--from-metadata", from_meta, "re-run the configuration recorded in a metadata file");
  repro->add_flag("--no-sim", no_sim, "theory only");
  repro->add_flag("--svg", svg, "also write SVG plots");
  repro->add_flag("--force", force, "ignore the memory and runtime guard");

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  std::string level = "fast";
  std::string report_path;
  int q_nodes = 0;
  std::uint64_t v_seed = 2024;
  verify->add_option("level", level, "fast | full")->capture_default_str();
  verify->add_option("--report", report_path, "write the JSON report here");
  verify->add_option("--quadrature-nodes", q_nodes, "fixed, non-adaptive node count (diagnostics)");
  verify->add_option("--seed", v_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto start = std::chrono::steady_clock::now();

    if (*build) {
      const Variant v = build_opts.variant();
      const double t = parse_time(build_t);
      const RngSpec rng{build_opts.seed, 0};
      const auto gt = make_ground_truths(build_opts.neurons, build_opts.patterns(), rng.child(0));
      std::optional<ExampleSet> ex;
      if (v != Variant::BasicStoring) ex = make_examples(gt, build_opts.per_class, build_opts.quality, rng.child(1));
      const auto info = ex ? build_information_matrix(*ex, v) : build_information_matrix(gt);
      auto j = build_coupling(info, t);
      const auto out = resolve_out(build_out);
      write_coupling(out, j, build_opts.seed);
      std::cout << "wrote " << out.string() << '\n';
      if (!build_dataset.empty()) {
        const auto dpath = resolve_out(build_dataset);
        write_dataset(dpath, DatasetDump{gt, ex, build_opts.seed, to_string(v)});
        std::cout << "wrote " << dpath.string() << '\n';
      }
      return 0;
    }

    if (*density) {
      const ModelSetting setting{parse_variant(dens_setting), dens_alpha, dens_r, 1};
      const auto law = law_for(setting, dens_t);
      const auto s = law.support();
      if (dens_grid < 2) throw DomainError("--grid must be >= 2");
      std::string csv = "lambda,density,peak_location,peak_mass\n";
      for (int k = 0; k < dens_grid; ++k) {
        const double l = s.lower + (s.upper - s.lower) * k / (dens_grid - 1);
        csv += num(l) + ',' + num(law.bulk_mass() * bulk_density(law, l)) + ',' + num(law.peak_location()) + ',' +
               num(law.peak_mass()) + '\n';
      }
      json cfg{{"command", "theory density"}, {"setting", dens_setting}, {"alpha", dens_alpha},
               {"r", dens_r},                 {"t", dens_t},             {"grid", dens_grid}};
      write_csv(resolve_out(dens_out), csv, cfg, seconds_since(start));
      return 0;
    }

    if (*rtheory) {
      const auto kind = parse_scenario(r_scenario);
      const auto [name, grid] = parse_sweep(r_sweep);
      const auto rows = predict_curve(kind, r_alpha, r_t, grid, r_threshold);
      std::string csv = "x,m1_theory,ga_bound\n";
      for (const auto& row : rows) csv += num(row.x) + ',' + num(row.m1) + ',' + num(row.ga_bound) + '\n';
      std::size_t flagged = 0;
      for (const auto& row : rows) flagged += row.ga_flagged ? 1 : 0;
      if (flagged) std::cerr << flagged << " rows exceed the GA validity threshold " << r_threshold << '\n';
      json cfg{{"command", "retrieval theory"}, {"scenario", r_scenario}, {"alpha", r_alpha},
               {"t", r_t},                      {"sweep", r_sweep},       {"sweep_variable", name},
               {"ga_threshold", r_threshold}};
      write_csv(resolve_out(r_out), csv, cfg, seconds_since(start));
      return 0;
    }

    if (*simulate) {
      json cfg = sim_opts.to_json();
      cfg["t"] = sim_t;
      cfg["trials"] = sim_trials;
      const Variant v = sim_opts.variant();

      if (*sim_retrieval) {
        RetrievalConfig rc;
        rc.setting = v;
        rc.neurons = sim_opts.neurons;
        rc.alpha = sim_opts.alpha;
        rc.quality = sim_opts.quality;
        rc.per_class = v == Variant::BasicStoring ? 1 : sim_opts.per_class;
        rc.times = sim_t;
        rc.probe_overlaps = sim_p;
        rc.datasets = sim_trials;
        rc.probes_per_dataset = sim_probes;
        rc.zero_diagonal = sim_zero_diag;
        rc.threads = sim_threads;
        rc.rng = RngSpec{sim_opts.seed, 0};
        if (auto mem = available_memory()) rc.memory_limit_bytes = *mem / 2;
        const auto grid = run_retrieval_trials(rc);
        const ScenarioKind kind = v == Variant::BasicStoring ? ScenarioKind::StoringAttractiveness
                                  : v == Variant::Supervised ? ScenarioKind::SupervisedAttractiveness
                                                             : ScenarioKind::UnsupervisedAttractiveness;
        std::string csv = "t,x,m0_mean,m1_mean,m1_stderr,m1_between_var,m1_within_var,m1_theory,ga_bound\n";
        for (std::size_t ti = 0; ti < grid.times.size(); ++ti) {
          const auto theory = predict_curve(kind, rc.alpha, grid.times[ti], grid.overlaps);
          for (std::size_t pi = 0; pi < grid.overlaps.size(); ++pi) {
            const auto& c = grid.at(ti, pi);
            csv += num(grid.times[ti]) + ',' + num(grid.overlaps[pi]) + ',' + num(c.m0_mean) + ',' + num(c.m1_mean) +
                   ',' + num(c.m1_stderr) + ',' + num(c.m1_between_var) + ',' + num(c.m1_within_var) + ',' +
                   num(theory[pi].m1) + ',' + num(theory[pi].ga_bound) + '\n';
          }
        }
        cfg["command"] = "simulate retrieval";
        cfg["p"] = sim_p;
        cfg["probes"] = sim_probes;
        cfg["zero_diagonal"] = sim_zero_diag;
        write_csv(resolve_out(sim_out), csv, cfg, seconds_since(start));
        return 0;
      }

      if (*sim_spectrum) {
        std::string csv = "t,bin_low,bin_high,density\n";
        json summary = json::array();
        for (double t : sim_t) {
          SpectrumConfig sc;
          sc.setting = v;
          sc.neurons = sim_opts.neurons;
          sc.alpha = sim_opts.alpha;
          sc.quality = sim_opts.quality;
          sc.per_class = sim_opts.per_class;
          sc.time = t;
          sc.bins = sim_bins;
          sc.realizations = sim_trials;
          // Same disorder for every t.
          sc.rng = RngSpec{sim_opts.seed, 0};
          const auto h = empirical_spectrum_histogram(sc);
          for (std::size_t b = 0; b < h.density.size(); ++b) {
            csv += num(t) + ',' + num(h.edges[b]) + ',' + num(h.edges[b + 1]) + ',' + num(h.density[b]) + '\n';
          }
          summary.push_back({{"t", t}, {"w1_bulk", h.w1_bulk}, {"peak_mass", h.peak_mass},
                             {"zero_count", h.zero_count}});
          std::cout << "t = " << t << ": W1 = " << h.w1_bulk << ", peak mass = " << h.peak_mass << '\n';
        }
        cfg["command"] = "simulate spectrum";
        cfg["bins"] = sim_bins;
        cfg["summary"] = summary;
        write_csv(resolve_out(sim_out), csv, cfg, seconds_since(start));
        return 0;
      }

      if (*sim_se) {
        SeConfig sc;
        sc.setting = v;
        sc.neurons = sim_opts.neurons;
        sc.alpha = sim_opts.alpha;
        sc.quality = sim_opts.quality;
        sc.per_class = sim_opts.per_class;
        sc.times = sim_t;
        sc.realizations = sim_trials;
        sc.rng = RngSpec{sim_opts.seed, 0};
        const auto est = run_se_trials(sc);
        std::string csv = "t,se_mean,se_stderr,se_theory\n";
        for (std::size_t ti = 0; ti < sim_t.size(); ++ti) {
          csv += num(sim_t[ti]) + ',' + num(est[ti].mean) + ',' + num(est[ti].std_error) + ',' +
                 num(se_theory(v, sc.alpha, sc.quality, sim_t[ti])) + '\n';
        }
        cfg["command"] = "simulate se";
        write_csv(resolve_out(sim_out), csv, cfg, seconds_since(start));
        return 0;
      }

      if (*sim_dyn) {
        const RngSpec rng{sim_opts.seed, 0};
        const auto gt = make_ground_truths(sim_opts.neurons, sim_opts.patterns(), rng.child(0));
        std::optional<ExampleSet> ex;
        if (v != Variant::BasicStoring) ex = make_examples(gt, sim_opts.per_class, sim_opts.quality, rng.child(1));
        const auto info = ex ? build_information_matrix(*ex, v) : build_information_matrix(gt);
        const double p = v == Variant::BasicStoring ? sim_p.front() : sim_opts.quality;
        std::string csv = "t,trial,step,m\n";
        for (double t : sim_t) {
          const auto j = build_coupling(info, t);
          for (Index k = 0; k < sim_trials; ++k) {
            const auto ref = gt.pattern(k % gt.count());
            const auto start_cfg = perturb_on_ball(ref, p, rng.child(2).child(static_cast<std::uint64_t>(k)));
            for (const auto& s : run_dynamics(j, start_cfg, sim_steps)) {
              csv += num(t) + ',' + std::to_string(k) + ',' + std::to_string(s.step) + ',' + num(overlap(ref, s.config)) +
                     '\n';
            }
          }
        }
        cfg["command"] = "simulate dynamics";
        cfg["p"] = p;
        cfg["steps"] = sim_steps;
        cfg["note"] = "exploratory: no theoretical prediction beyond one step";
        write_csv(resolve_out(sim_out), csv, cfg, seconds_since(start));
        return 0;
      }
    }

    if (*repro) {
      ExperimentConfig c;
      if (!from_meta.empty()) {
        std::ifstream f(from_meta);
        if (!f) throw std::runtime_error("cannot read " + from_meta);
        c = config_from_json(json::parse(f).at("config"));
      } else {
        if (fig_id.empty()) throw DomainError("reproduce needs a figure id or --from-metadata");
        c = default_config(fig_id);
        c.seed = f_seed;
      }
      if (!panel.empty()) c.panel = panel;
      if (!f_alpha.empty()) c.alphas = f_alpha;
      if (!f_r.empty()) c.qualities = f_r;
      if (!f_t.empty()) c.times = f_t;
      if (!f_p.empty()) c.overlaps = f_p;
      if (!f_m.empty()) c.per_class = f_m;
      if (f_n > 0) c.neurons = f_n;
      if (f_trials > 0) c.trials = f_trials;
      if (f_probes > 0) c.probes_per_trial = f_probes;
      if (f_threads > 0) c.threads = f_threads;
      if (f_max_runtime > 0.0) c.max_runtime_seconds = f_max_runtime;
      if (!f_outdir.empty()) c.output_dir = f_outdir;
      if (from_meta.empty() || repro->count("--seed")) c.seed = f_seed;
      if (no_sim) c.simulate = false;
      if (svg) c.svg = true;
      if (force) c.force = true;
      const auto out = reproduce(c);
      for (const auto& p : out.files) std::cout << "wrote " << p.string() << '\n';
      std::cout << "wrote " << out.metadata.string() << '\n';
      return 0;
    }

    if (*verify) {
      VerifyOptions o;
      if (level == "fast") {
        o.level = VerifyLevel::Fast;
      } else if (level == "full") {
        o.level = VerifyLevel::Full;
      } else {
        throw DomainError("verify level must be fast or full");
      }
      o.seed = v_seed;
      if (q_nodes > 0) {
        o.quadrature.initial_nodes = q_nodes;
        o.quadrature.adaptive = false;
      }
      const auto results = run_verification(o);
      bool all = true;
      for (const auto& r : results) {
        std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.id << "  " << r.name << "  (" << r.seconds << " s)\n";
        for (const auto& c : r.checks) {
          if (!c.passed) std::cout << "      failed: " << c.name << "  value " << c.value << '\n';
        }
        all = all && r.passed;
      }
      const auto report = verification_report(results, o);
      if (!report_path.empty()) {
        std::ofstream f(resolve_out(report_path));
        f << report.dump(2) << '\n';
      } else {
        std::cout << report.dump() << '\n';
      }
      return all ? 0 : 1;
    }
  } catch (const ResourceError& e) {
    std::cerr << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
