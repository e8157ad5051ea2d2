#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dreamhop/coupling.hpp"
#include "dreamhop/data_gen.hpp"
#include "dreamhop/errors.hpp"
#include "dreamhop/experiments.hpp"
#include "dreamhop/retrieval_theory.hpp"
#include "dreamhop/simulation.hpp"
#include "dreamhop/spectral_theory.hpp"
#include "dreamhop/verification.hpp"

namespace py = pybind11;
using namespace dreamhop;

namespace {

Eigen::MatrixXd coupling_for(const std::string& setting, const SpinMatrix& patterns,
                             const std::optional<SpinMatrix>& examples, Index per_class, double t) {
  const Variant v = parse_variant(setting);
  if (v == Variant::BasicStoring) return build_coupling(build_information_matrix(GroundTruthSet{patterns}), t).matrix;
  if (!examples) throw DomainError("examples are required for the supervised and unsupervised settings");
  if (per_class < 1 || examples->rows() != patterns.rows() * per_class) {
    throw ShapeError("examples must have P * M rows");
  }
  ExampleSet ex{*examples, patterns.rows(), per_class, 1.0};
  return build_coupling(build_information_matrix(ex, v), t).matrix;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dreaming Hopfield couplings: native core";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_RuntimeError);

  m.attr("PROJECTOR_TIME") = kProjectorTime;

  // data
  m.def(
      "ground_truths",
      [](Index n, Index p, std::uint64_t seed, std::uint64_t stream) {
        return make_ground_truths(n, p, RngSpec{seed, stream}).patterns;
      },
      py::arg("n"), py::arg("p"), py::arg("seed") = 0, py::arg("stream") = 0,
      "P x N matrix of unbiased +/-1 archetypes (int8).");
  m.def(
      "examples",
      [](const SpinMatrix& patterns, Index per_class, double r, std::uint64_t seed, std::uint64_t stream) {
        return make_examples(GroundTruthSet{patterns}, per_class, r, RngSpec{seed, stream}).examples;
      },
      py::arg("patterns"), py::arg("per_class"), py::arg("r"), py::arg("seed") = 0, py::arg("stream") = 0,
      "P*M x N noisy examples; row mu*M + a is example a of class mu.");

  // couplings
  m.def("eigen_map", &eigen_map, py::arg("lambda0"), py::arg("t"));
  m.def("eigen_map_inverse", &eigen_map_inverse, py::arg("lam"), py::arg("t"));
  m.def("coupling", &coupling_for, py::arg("setting"), py::arg("patterns"), py::arg("examples") = py::none(),
        py::arg("per_class") = 1, py::arg("t") = 0.0,
        "Dense J(t) for the given setting; t may be PROJECTOR_TIME.");
  m.def(
      "eigenvalues",
      [](const Eigen::MatrixXd& j) { return spectrum(CouplingMatrix{j, 0.0}).values; }, py::arg("j"),
      "Ascending eigenvalues of a symmetric matrix.");

  // spectral theory
  py::class_<SpectralLaw>(m, "SpectralLaw")
      .def_readonly("alpha", &SpectralLaw::alpha)
      .def_readonly("sigma2", &SpectralLaw::sigma2)
      .def_readonly("delta", &SpectralLaw::delta)
      .def_readonly("t", &SpectralLaw::t)
      .def_property_readonly("support", [](const SpectralLaw& l) {
        const auto s = l.support();
        return std::make_pair(s.lower, s.upper);
      })
      .def_property_readonly("peak_location", &SpectralLaw::peak_location)
      .def_property_readonly("peak_mass", &SpectralLaw::peak_mass)
      .def("density", [](const SpectralLaw& l, double x) { return bulk_density(l, x); }, py::arg("lam"))
      .def("integrate_bulk", [](const SpectralLaw& l, const RealFunction& f) { return integrate_bulk(l, f); })
      .def("integrate_full", [](const SpectralLaw& l, const RealFunction& f) { return integrate_full(l, f); })
      .def("cdf", [](const SpectralLaw& l, double x) { return bulk_cdf(l, x); })
      .def("quantile", [](const SpectralLaw& l, double u) { return bulk_quantile(l, u); })
      .def("__repr__", [](const SpectralLaw& l) {
        return "SpectralLaw(alpha=" + std::to_string(l.alpha) + ", sigma2=" + std::to_string(l.sigma2) +
               ", delta=" + std::to_string(l.delta) + ", t=" + std::to_string(l.t) + ")";
      });
  m.def(
      "law",
      [](const std::string& setting, double alpha, double t, double r) {
        return law_for(ModelSetting{parse_variant(setting), alpha, r, 1}, t);
      },
      py::arg("setting"), py::arg("alpha"), py::arg("t"), py::arg("r") = 1.0);
  m.def(
      "se_theory",
      [](const std::string& setting, double alpha, double r, double t) {
        return se_theory(parse_variant(setting), alpha, r, t);
      },
      py::arg("setting"), py::arg("alpha"), py::arg("r"), py::arg("t"));

  // retrieval theory
  py::enum_<ScenarioKind>(m, "Scenario")
      .value("STABILITY", ScenarioKind::StoringStability)
      .value("STORING", ScenarioKind::StoringAttractiveness)
      .value("SUPERVISED", ScenarioKind::SupervisedAttractiveness)
      .value("UNSUPERVISED", ScenarioKind::UnsupervisedAttractiveness);
  m.def(
      "moments",
      [](ScenarioKind kind, double alpha, double t, double overlap) {
        const auto mp = moments(make_scenario(kind, alpha, t, overlap));
        return std::make_pair(mp.mu1, mp.mu2);
      },
      py::arg("scenario"), py::arg("alpha"), py::arg("t"), py::arg("overlap") = 1.0, "(mu1, mu2)");
  m.def(
      "m1_theory",
      [](ScenarioKind kind, double alpha, double t, double overlap) {
        return m1_theory(moments(make_scenario(kind, alpha, t, overlap))).m1;
      },
      py::arg("scenario"), py::arg("alpha"), py::arg("t"), py::arg("overlap") = 1.0);
  py::class_<CurvePoint>(m, "CurvePoint")
      .def_readonly("x", &CurvePoint::x)
      .def_readonly("m0", &CurvePoint::m0)
      .def_readonly("m1", &CurvePoint::m1)
      .def_readonly("ga_bound", &CurvePoint::ga_bound)
      .def_readonly("ga_flagged", &CurvePoint::ga_flagged)
      .def_readonly("degenerate_variance", &CurvePoint::degenerate_variance);
  m.def("predict_curve", &predict_curve, py::arg("scenario"), py::arg("alpha"), py::arg("t"), py::arg("grid"),
        py::arg("ga_threshold") = kDefaultGaThreshold);

  // simulation
  m.def(
      "simulate_retrieval",
      [](const std::string& setting, Index n, double alpha, double r, Index per_class, std::vector<double> times,
         std::vector<double> overlaps, Index datasets, Index probes, std::uint64_t seed, unsigned threads) {
        RetrievalConfig c;
        c.setting = parse_variant(setting);
        c.neurons = n;
        c.alpha = alpha;
        c.quality = r;
        c.per_class = per_class;
        c.times = std::move(times);
        c.probe_overlaps = std::move(overlaps);
        c.datasets = datasets;
        c.probes_per_dataset = probes;
        c.rng = RngSpec{seed, 0};
        c.threads = threads;
        const auto grid = [&] {
          py::gil_scoped_release release;
          return run_retrieval_trials(c);
        }();
        py::list rows;
        for (std::size_t ti = 0; ti < grid.times.size(); ++ti) {
          for (std::size_t pi = 0; pi < grid.overlaps.size(); ++pi) {
            const auto& cell = grid.at(ti, pi);
            py::dict d;
            d["t"] = grid.times[ti];
            d["x"] = grid.overlaps[pi];
            d["m0_mean"] = cell.m0_mean;
            d["m1_mean"] = cell.m1_mean;
            d["m1_stderr"] = cell.m1_stderr;
            d["samples"] = cell.samples;
            rows.append(d);
          }
        }
        return rows;
      },
      py::arg("setting") = "storing", py::arg("n") = 1000, py::arg("alpha") = 0.1, py::arg("r") = 1.0,
      py::arg("per_class") = 1, py::arg("times") = std::vector<double>{0.0},
      py::arg("overlaps") = std::vector<double>{1.0}, py::arg("datasets") = 10, py::arg("probes") = 4,
      py::arg("seed") = 1, py::arg("threads") = 0);

  // tooling
  m.def("git_blob_sha1", [](const std::string& s) { return git_blob_sha1(s); }, py::arg("content"));
  m.def(
      "verify",
      [](const std::string& level, std::uint64_t seed) {
        VerifyOptions o;
        if (level == "fast") {
          o.level = VerifyLevel::Fast;
        } else if (level == "full") {
          o.level = VerifyLevel::Full;
        } else {
          throw DomainError("verify level must be fast or full");
        }
        o.seed = seed;
        std::vector<CriterionResult> res;
        {
          py::gil_scoped_release release;
          res = run_verification(o);
        }
        py::dict out;
        for (const auto& r : res) out[py::int_(r.id)] = r.passed;
        return out;
      },
      py::arg("level") = "fast", py::arg("seed") = 2024, "Map of criterion id to pass/fail.");
}
