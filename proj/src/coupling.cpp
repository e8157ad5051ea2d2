#include "dreamhop/coupling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <string>

#include <lapacke.h>
#include <nlohmann/json.hpp>

#include "dreamhop/errors.hpp"

namespace dreamhop {

namespace {

// A^T A, exactly symmetric.
Eigen::MatrixXd column_gram_of(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(a.cols(), a.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

// Ascending eigenvalues (and eigenvectors as columns) of a symmetric matrix
// via LAPACK's divide-and-conquer driver. Returns false on failure.
bool symmetric_eigen(const Eigen::MatrixXd& a, bool vectors, Eigen::VectorXd& values, Eigen::MatrixXd& basis) {
  const Index n = a.rows();
  basis = a;
  values.resize(n);
  if (n == 0) return true;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'L', static_cast<lapack_int>(n),
                                         basis.data(), static_cast<lapack_int>(n), values.data());
  if (!vectors) basis.resize(0, 0);
  return info == 0;
}

void check_time(double t) {
  if (std::isnan(t) || t < 0.0) throw DomainError("dreaming time must be >= 0");
}

std::filesystem::path sidecar_of(const std::filesystem::path& path) {
  auto s = path;
  s += ".json";
  return s;
}

}  // namespace

PackedSpinColumns::PackedSpinColumns(const SpinMatrix& rows)
    : rows_(rows.rows()), cols_(rows.cols()), words_((rows.rows() + 63) / 64) {
  bits_.assign(static_cast<std::size_t>(words_ * cols_), 0);
  std::vector<std::uint64_t> word(static_cast<std::size_t>(cols_));
  for (Index w = 0; w < words_; ++w) {
    std::fill(word.begin(), word.end(), 0);
    const Index end = std::min(rows_, (w + 1) * 64);
    for (Index k = w * 64; k < end; ++k) {
      const int shift = static_cast<int>(k % 64);
      const std::int8_t* row = rows.data() + k * cols_;
      std::uint64_t* out = word.data();
      // (s + 1) / 2 maps -1, +1 to 0, 1.
      for (Index i = 0; i < cols_; ++i) out[i] |= static_cast<std::uint64_t>((row[i] + 1) >> 1) << shift;
    }
    for (Index i = 0; i < cols_; ++i) bits_[static_cast<std::size_t>(i * words_ + w)] = word[static_cast<std::size_t>(i)];
  }
}

Eigen::MatrixXd PackedSpinColumns::column_gram() const {
  Eigen::MatrixXd g(cols_, cols_);
  // Four columns of the outer loop share each pass over column j.
  constexpr Index kTile = 4;
  for (Index i0 = 0; i0 < cols_; i0 += kTile) {
    const Index i1 = std::min(cols_, i0 + kTile);
    for (Index j = 0; j < i1; ++j) {
      const std::uint64_t* b = bits_.data() + j * words_;
      Index differ[kTile] = {0, 0, 0, 0};
      for (Index w = 0; w < words_; ++w) {
        const std::uint64_t bw = b[w];
        for (Index i = i0; i < i1; ++i) differ[i - i0] += std::popcount(bits_[static_cast<std::size_t>(i * words_ + w)] ^ bw);
      }
      for (Index i = std::max(i0, j); i < i1; ++i) {
        g(i, j) = g(j, i) = static_cast<double>(rows_ - 2 * differ[i - i0]);
      }
    }
  }
  return g;
}

Eigen::MatrixXd PackedSpinColumns::dense() const {
  Eigen::MatrixXd x(rows_, cols_);
  for (Index i = 0; i < cols_; ++i) {
    for (Index k = 0; k < rows_; ++k) {
      const bool up = (bits_[static_cast<std::size_t>(i * words_ + k / 64)] >> (k % 64)) & 1U;
      x(k, i) = up ? 1.0 : -1.0;
    }
  }
  return x;
}

InformationMatrix::InformationMatrix(Variant variant, Eigen::MatrixXd rows, double normalization)
    : variant_(variant), rows_(std::move(rows)), normalization_(normalization) {
  if (!(normalization_ > 0.0)) throw DomainError("information matrix: D_N must be positive");
}

InformationMatrix::InformationMatrix(Variant variant, PackedSpinColumns rows, double normalization)
    : variant_(variant), rows_(std::move(rows)), normalization_(normalization) {
  if (!(normalization_ > 0.0)) throw DomainError("information matrix: D_N must be positive");
}

Index InformationMatrix::rows() const noexcept {
  return std::visit([](const auto& x) { return x.rows(); }, rows_);
}

Index InformationMatrix::neurons() const noexcept {
  return std::visit([](const auto& x) { return x.cols(); }, rows_);
}

Eigen::MatrixXd InformationMatrix::dense() const {
  if (const auto* d = std::get_if<Eigen::MatrixXd>(&rows_)) return *d;
  return std::get<PackedSpinColumns>(rows_).dense();
}

Eigen::MatrixXd InformationMatrix::correlation() const {
  const Eigen::MatrixXd x = dense();
  return column_gram_of(x.transpose()) / normalization_;
}

Eigen::MatrixXd InformationMatrix::hebbian() const {
  if (const auto* d = std::get_if<Eigen::MatrixXd>(&rows_)) return column_gram_of(*d) / normalization_;
  return std::get<PackedSpinColumns>(rows_).column_gram() / normalization_;
}

InformationMatrix build_information_matrix(const GroundTruthSet& gt) {
  return {Variant::BasicStoring, gt.patterns.cast<double>(), static_cast<double>(gt.size())};
}

InformationMatrix build_information_matrix(const ExampleSet& ex, Variant variant) {
  const Index n = ex.size();
  switch (variant) {
    case Variant::Supervised: {
      Eigen::MatrixXd means = Eigen::MatrixXd::Zero(ex.classes, n);
      for (Index mu = 0; mu < ex.classes; ++mu) {
        for (Index a = 0; a < ex.per_class; ++a) {
          means.row(mu) += ex.examples.row(ex.row_of(mu, a)).cast<double>();
        }
      }
      means /= static_cast<double>(ex.per_class);
      return {Variant::Supervised, std::move(means), static_cast<double>(n)};
    }
    case Variant::Unsupervised: {
      const double norm = static_cast<double>(n) * static_cast<double>(ex.per_class);
      if (ex.examples.rows() < n) {
        return {Variant::Unsupervised, ex.examples.cast<double>(), norm};
      }
      return {Variant::Unsupervised, PackedSpinColumns(ex.examples), norm};
    }
    case Variant::BasicStoring: break;
  }
  throw ShapeError("build_information_matrix: examples need a supervised or unsupervised setting");
}

double eigen_map(double lambda0, double t) {
  check_time(t);
  if (std::isinf(t)) return lambda0 > kZeroEigenvalueTol ? 1.0 : 0.0;
  return (1.0 + t) * lambda0 / (1.0 + t * lambda0);
}

double eigen_map_inverse(double lambda, double t) {
  check_time(t);
  const double denom = 1.0 + t * (1.0 - lambda);
  if (!(denom > 0.0)) throw DomainError("eigen_map_inverse: eigenvalue beyond the projector limit");
  return lambda / denom;
}

DreamingKernel::DreamingKernel(const InformationMatrix& info) : setting_(info.variant()) {
  const Index n = info.neurons();
  Eigen::MatrixXd basis;
  Eigen::VectorXd values;
  const bool via_correlation = info.rows() <= n;
  if (via_correlation) {
    if (!symmetric_eigen(info.correlation(), true, values, basis)) {
      throw NumericalError("DreamingKernel: eigensolver failed on C");
    }
  } else {
    if (!symmetric_eigen(info.hebbian(), true, values, basis)) {
      throw NumericalError("DreamingKernel: eigensolver failed on J(0)");
    }
  }
  const double tol = kZeroEigenvalueTol * std::max(1.0, values.size() ? values.maxCoeff() : 0.0);
  Index first = 0;
  while (first < values.size() && values[first] <= tol) ++first;
  const Index r = values.size() - first;
  lambda0_ = values.tail(r);
  if (via_correlation) {
    // e = X^T u / sqrt(l D_N) is the unit eigenvector of J(0) paired with u.
    const Eigen::MatrixXd x = info.dense();
    modes_ = x.transpose() * basis.rightCols(r);
    for (Index k = 0; k < r; ++k) modes_.col(k) /= std::sqrt(lambda0_[k] * info.normalization());
  } else {
    modes_ = basis.rightCols(r);
  }
}

Eigen::VectorXd DreamingKernel::eigenvalues(double t) const {
  return lambda0_.unaryExpr([t](double l) { return eigen_map(l, t); });
}

Eigen::VectorXd DreamingKernel::full_spectrum(double t) const {
  Eigen::VectorXd all = Eigen::VectorXd::Zero(neurons());
  all.tail(rank()) = eigenvalues(t);
  return all;
}

CouplingMatrix DreamingKernel::coupling(double t) const {
  const Eigen::VectorXd g = eigenvalues(t);
  const Eigen::MatrixXd w = modes_ * g.cwiseSqrt().asDiagonal();
  return {column_gram_of(w.transpose()), t, setting_};
}

Eigen::MatrixXd DreamingKernel::apply(double t, const Eigen::MatrixXd& s) const {
  return modes_ * (eigenvalues(t).asDiagonal() * (modes_.transpose() * s));
}

Eigen::VectorXd DreamingKernel::diagonal(double t) const {
  return modes_.cwiseAbs2() * eigenvalues(t);
}

CouplingMatrix build_coupling(const InformationMatrix& info, double t) {
  check_time(t);
  if (t == 0.0) return {info.hebbian(), 0.0, info.variant()};
  return DreamingKernel(info).coupling(t);
}

CouplingMatrix integrate_dreaming_ode(const CouplingMatrix& j0, double t_final, int steps) {
  if (j0.time != 0.0) throw DomainError("integrate_dreaming_ode: start from the t = 0 coupling");
  if (steps < 1) throw DomainError("integrate_dreaming_ode: steps must be >= 1");
  check_time(t_final);
  if (std::isinf(t_final)) throw DomainError("integrate_dreaming_ode: t_final must be finite");
  CouplingMatrix out = j0;
  if (t_final == 0.0) return out;
  auto rhs = [](double t, const Eigen::MatrixXd& j) -> Eigen::MatrixXd {
    return (j - j * j) / (1.0 + t);
  };
  const double h = t_final / steps;
  Eigen::MatrixXd& j = out.matrix;
  for (int s = 0; s < steps; ++s) {
    const double t = s * h;
    const Eigen::MatrixXd k1 = rhs(t, j);
    const Eigen::MatrixXd k2 = rhs(t + 0.5 * h, j + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = rhs(t + 0.5 * h, j + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = rhs(t + h, j + h * k3);
    j += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  j = 0.5 * (j + j.transpose()).eval();
  out.time = t_final;
  return out;
}

SpectrumResult spectrum(const CouplingMatrix& j, bool with_vectors) {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  if (!symmetric_eigen(j.matrix, with_vectors, values, vectors)) {
    const auto dump = std::filesystem::temp_directory_path() /
                      ("dreamhop_failed_matrix_" + std::to_string(j.size()) + ".bin");
    write_coupling(dump, j, 0);
    throw NumericalError("spectrum: eigensolver did not converge; matrix dumped to " + dump.string());
  }
  SpectrumResult out{std::move(values), std::nullopt};
  if (with_vectors) out.vectors = std::move(vectors);
  return out;
}

CouplingOperator CouplingOperator::hebbian(const InformationMatrix& info) {
  CouplingOperator op;
  if (info.is_packed()) {
    Eigen::MatrixXd j = info.hebbian();
    op.diagonal_ = j.diagonal();
    op.repr_ = std::move(j);
    return op;
  }
  Factored f{info.dense().transpose(), Eigen::VectorXd::Constant(info.rows(), 1.0 / info.normalization())};
  op.diagonal_ = f.left.cwiseAbs2().rowwise().sum() / info.normalization();
  op.repr_ = std::move(f);
  return op;
}

CouplingOperator CouplingOperator::spectral(const DreamingKernel& kernel, double t) {
  CouplingOperator op;
  op.diagonal_ = kernel.diagonal(t);
  op.repr_ = Factored{kernel.modes(), kernel.eigenvalues(t)};
  return op;
}

CouplingOperator CouplingOperator::dense(CouplingMatrix j) {
  CouplingOperator op;
  op.diagonal_ = j.matrix.diagonal();
  op.repr_ = std::move(j.matrix);
  return op;
}

CouplingOperator CouplingOperator::make(const InformationMatrix& info, double t) {
  check_time(t);
  if (t == 0.0) return hebbian(info);
  DreamingKernel kernel(info);
  if (2 * kernel.rank() < kernel.neurons()) return spectral(kernel, t);
  return dense(kernel.coupling(t));
}

Index CouplingOperator::neurons() const noexcept { return diagonal_.size(); }

Eigen::MatrixXd CouplingOperator::apply(const Eigen::MatrixXd& s) const {
  if (s.rows() != neurons()) throw ShapeError("CouplingOperator::apply: size mismatch");
  if (const auto* f = std::get_if<Factored>(&repr_)) {
    return f->left * (f->weights.asDiagonal() * (f->left.transpose() * s));
  }
  return std::get<Eigen::MatrixXd>(repr_) * s;
}

void write_coupling(const std::filesystem::path& path, const CouplingMatrix& j, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_coupling: cannot open " + path.string());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = j.matrix;
  out.write(reinterpret_cast<const char*>(rm.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
  nlohmann::json meta{{"N", j.size()},
                      {"t", std::isinf(j.time) ? nlohmann::json("inf") : nlohmann::json(j.time)},
                      {"setting", to_string(j.setting)},
                      {"seed", seed},
                      {"dtype", "float64"},
                      {"layout", "row-major"}};
  std::ofstream(sidecar_of(path)) << meta.dump(2) << '\n';
}

CouplingMatrix read_coupling(const std::filesystem::path& path) {
  std::ifstream side(sidecar_of(path));
  if (!side) throw std::runtime_error("read_coupling: missing sidecar for " + path.string());
  const auto meta = nlohmann::json::parse(side);
  const Index n = meta.at("N").get<Index>();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(n, n);
  std::ifstream in(path, std::ios::binary);
  in.read(reinterpret_cast<char*>(rm.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
  if (!in) throw std::runtime_error("read_coupling: truncated file " + path.string());
  CouplingMatrix j;
  j.matrix = rm;
  const auto& t = meta.at("t");
  j.time = t.is_string() ? kProjectorTime : t.get<double>();
  j.setting = parse_variant(meta.at("setting").get<std::string>());
  return j;
}

}  // namespace dreamhop
