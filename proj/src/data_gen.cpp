#include "dreamhop/data_gen.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dreamhop/errors.hpp"

namespace dreamhop {

BinaryConfig::BinaryConfig(std::vector<std::int8_t> spins) : spins_(std::move(spins)) {
  if (spins_.empty()) throw DomainError("BinaryConfig: empty configuration");
  for (auto s : spins_) {
    if (s != 1 && s != -1) throw DomainError("BinaryConfig: entries must be +1 or -1");
  }
}

BinaryConfig BinaryConfig::from_row(const SpinMatrix& m, Index row) {
  std::vector<std::int8_t> s(static_cast<std::size_t>(m.cols()));
  for (Index i = 0; i < m.cols(); ++i) s[static_cast<std::size_t>(i)] = m(row, i);
  return BinaryConfig(std::move(s));
}

BinaryConfig BinaryConfig::sign_of(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::vector<std::int8_t> s(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) s[static_cast<std::size_t>(i)] = v[i] >= 0.0 ? 1 : -1;
  return BinaryConfig(std::move(s));
}

Eigen::VectorXd BinaryConfig::as_vector() const {
  Eigen::VectorXd v(size());
  for (Index i = 0; i < size(); ++i) v[i] = spins_[static_cast<std::size_t>(i)];
  return v;
}

Index hamming_distance(const BinaryConfig& a, const BinaryConfig& b) {
  if (a.size() != b.size()) throw ShapeError("hamming_distance: size mismatch");
  Index d = 0;
  for (Index i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

double overlap(const BinaryConfig& a, const BinaryConfig& b) {
  if (a.size() != b.size()) throw ShapeError("overlap: size mismatch");
  long long s = 0;
  for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return static_cast<double>(s) / static_cast<double>(a.size());
}

BinaryConfig sample_rademacher(double p, Index n, const RngSpec& rng) {
  if (!(p >= -1.0 && p <= 1.0)) throw DomainError("sample_rademacher: p must lie in [-1,1]");
  if (n < 1) throw DomainError("sample_rademacher: n must be >= 1");
  auto eng = rng.engine();
  std::vector<std::int8_t> s(static_cast<std::size_t>(n));
  for (auto& x : s) x = static_cast<std::int8_t>(rademacher(eng, p));
  return BinaryConfig(std::move(s));
}

GroundTruthSet make_ground_truths(Index n, Index p, const RngSpec& rng) {
  if (n < 1 || p < 1) throw DomainError("make_ground_truths: N and P must be >= 1");
  if (p > n) throw DomainError("make_ground_truths: load P/N must not exceed 1");
  GroundTruthSet gt{SpinMatrix(p, n)};
  auto eng = rng.engine();
  // Unbiased spins: one engine draw supplies 64 of them.
  std::uint64_t bits = 0;
  int left = 0;
  std::int8_t* out = gt.patterns.data();
  for (Index k = 0; k < p * n; ++k) {
    if (left == 0) {
      bits = eng();
      left = 64;
    }
    out[k] = (bits & 1U) ? 1 : -1;
    bits >>= 1;
    --left;
  }
  return gt;
}

ExampleSet make_examples(const GroundTruthSet& gt, Index m, double r, const RngSpec& rng) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("make_examples: r must lie in [0,1]");
  if (m < 1) throw DomainError("make_examples: M must be >= 1");
  const Index p = gt.count();
  const Index n = gt.size();
  ExampleSet ex{SpinMatrix(p * m, n), p, m, r};
  // Two flips per engine draw, one from each 32-bit half: keep iff the half
  // is below (1+r)/2 * 2^32.
  const auto cut = static_cast<std::uint64_t>(std::ldexp(0.5 * (1.0 + r), 32));
  for (Index mu = 0; mu < p; ++mu) {
    auto eng = rng.child(static_cast<std::uint64_t>(mu)).engine();
    const std::int8_t* z = gt.patterns.data() + mu * n;
    for (Index a = 0; a < m; ++a) {
      std::int8_t* row = ex.examples.data() + ex.row_of(mu, a) * n;
      Index i = 0;
      for (; i + 1 < n; i += 2) {
        const std::uint64_t u = eng();
        row[i] = (u & 0xffffffffU) < cut ? z[i] : static_cast<std::int8_t>(-z[i]);
        row[i + 1] = (u >> 32) < cut ? z[i + 1] : static_cast<std::int8_t>(-z[i + 1]);
      }
      if (i < n) row[i] = (eng() & 0xffffffffU) < cut ? z[i] : static_cast<std::int8_t>(-z[i]);
    }
  }
  return ex;
}

BinaryConfig perturb_on_ball(const BinaryConfig& x, double p, const RngSpec& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("perturb_on_ball: p must lie in [0,1]");
  auto eng = rng.engine();
  std::vector<std::int8_t> s(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) {
    s[static_cast<std::size_t>(i)] = static_cast<std::int8_t>(rademacher(eng, p) * x[i]);
  }
  return BinaryConfig(std::move(s));
}

namespace {

std::filesystem::path sidecar_of(const std::filesystem::path& path) {
  auto s = path;
  s += ".json";
  return s;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const DatasetDump& dump) {
  const auto& gt = dump.ground_truths;
  const Index n = gt.size();
  const Index m = dump.examples ? dump.examples->per_class : 0;
  if (dump.examples && (dump.examples->classes != gt.count() || dump.examples->size() != n)) {
    throw ShapeError("write_dataset: examples do not match ground truths");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path.string());
  for (Index mu = 0; mu < gt.count(); ++mu) {
    out.write(reinterpret_cast<const char*>(gt.patterns.data() + mu * n), n);
    for (Index a = 0; a < m; ++a) {
      out.write(reinterpret_cast<const char*>(dump.examples->examples.data() +
                                              dump.examples->row_of(mu, a) * n),
                n);
    }
  }
  nlohmann::json meta{{"N", n},
                      {"P", gt.count()},
                      {"M", m},
                      {"r", dump.examples ? dump.examples->quality : 1.0},
                      {"seed", dump.seed},
                      {"setting", dump.setting},
                      {"dtype", "int8"},
                      {"layout", "row-major; per archetype: archetype row then its M examples"}};
  std::ofstream(sidecar_of(path)) << meta.dump(2) << '\n';
}

DatasetDump read_dataset(const std::filesystem::path& path) {
  std::ifstream side(sidecar_of(path));
  if (!side) throw std::runtime_error("read_dataset: missing sidecar for " + path.string());
  const auto meta = nlohmann::json::parse(side);
  const Index n = meta.at("N").get<Index>();
  const Index p = meta.at("P").get<Index>();
  const Index m = meta.at("M").get<Index>();
  DatasetDump dump;
  dump.seed = meta.at("seed").get<std::uint64_t>();
  dump.setting = meta.at("setting").get<std::string>();
  dump.ground_truths.patterns.resize(p, n);
  if (m > 0) dump.examples = ExampleSet{SpinMatrix(p * m, n), p, m, meta.at("r").get<double>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path.string());
  for (Index mu = 0; mu < p; ++mu) {
    in.read(reinterpret_cast<char*>(dump.ground_truths.patterns.data() + mu * n), n);
    for (Index a = 0; a < m; ++a) {
      in.read(reinterpret_cast<char*>(dump.examples->examples.data() +
                                      dump.examples->row_of(mu, a) * n),
              n);
    }
  }
  if (!in) throw std::runtime_error("read_dataset: truncated file " + path.string());
  return dump;
}

}  // namespace dreamhop
