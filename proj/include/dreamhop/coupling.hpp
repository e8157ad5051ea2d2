#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "dreamhop/data_gen.hpp"
#include "dreamhop/setting.hpp"

namespace dreamhop {

// Dreaming time of the projector limit.
inline constexpr double kProjectorTime = std::numeric_limits<double>::infinity();
// Hebbian eigenvalues at or below this are treated as exact zeros.
inline constexpr double kZeroEigenvalueTol = 1e-10;

// +/-1 matrix stored column-wise as bits (bit set <=> +1). Used for the
// unsupervised information matrix, whose P*M rows would not fit densely.
class PackedSpinColumns {
 public:
  PackedSpinColumns(const SpinMatrix& rows);

  [[nodiscard]] Index rows() const noexcept { return rows_; }
  [[nodiscard]] Index cols() const noexcept { return cols_; }
  // X^T X computed with xor/popcount.
  [[nodiscard]] Eigen::MatrixXd column_gram() const;
  [[nodiscard]] Eigen::MatrixXd dense() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Index words_ = 0;
  std::vector<std::uint64_t> bits_;
};

// The information matrix X (rows are stored vectors) with its
// normalization D_N, so that C = X X^T / D_N and J(0) = X^T X / D_N.
class InformationMatrix {
 public:
  InformationMatrix(Variant variant, Eigen::MatrixXd rows, double normalization);
  InformationMatrix(Variant variant, PackedSpinColumns rows, double normalization);

  [[nodiscard]] Variant variant() const noexcept { return variant_; }
  [[nodiscard]] double normalization() const noexcept { return normalization_; }
  [[nodiscard]] Index rows() const noexcept;
  [[nodiscard]] Index neurons() const noexcept;
  [[nodiscard]] bool is_packed() const noexcept {
    return std::holds_alternative<PackedSpinColumns>(rows_);
  }

  [[nodiscard]] Eigen::MatrixXd dense() const;
  // C = X X^T / D_N (rows x rows).
  [[nodiscard]] Eigen::MatrixXd correlation() const;
  // J(0) = X^T X / D_N (N x N).
  [[nodiscard]] Eigen::MatrixXd hebbian() const;

 private:
  Variant variant_;
  std::variant<Eigen::MatrixXd, PackedSpinColumns> rows_;
  double normalization_;
};

InformationMatrix build_information_matrix(const GroundTruthSet& gt);
// Supervised: one row per class, the empirical mean of its examples, D_N = N.
// Unsupervised: one row per example, D_N = N M.
InformationMatrix build_information_matrix(const ExampleSet& ex, Variant variant);

// Dense symmetric N x N coupling at dreaming time t.
struct CouplingMatrix {
  Eigen::MatrixXd matrix;
  double time = 0.0;
  Variant setting = Variant::BasicStoring;

  [[nodiscard]] Index size() const noexcept { return matrix.rows(); }
};

// (1+t) l0 / (1 + t l0). At t = kProjectorTime it returns 1 for l0 above
// kZeroEigenvalueTol and 0 otherwise.
double eigen_map(double lambda0, double t);
// l / (1 + t (1 - l)); throws DomainError if the denominator is not positive.
double eigen_map_inverse(double lambda, double t);

// Positive part of the Hebbian spectrum, J(0) = V diag(l0) V^T. Every J(t)
// shares V and has eigenvalues eigen_map(l0, t). The factorization comes
// from the smaller of C (rows x rows) and J(0) (N x N).
class DreamingKernel {
 public:
  explicit DreamingKernel(const InformationMatrix& info);

  [[nodiscard]] Index neurons() const noexcept { return modes_.rows(); }
  [[nodiscard]] Index rank() const noexcept { return modes_.cols(); }
  [[nodiscard]] Variant setting() const noexcept { return setting_; }
  [[nodiscard]] const Eigen::MatrixXd& modes() const noexcept { return modes_; }
  [[nodiscard]] const Eigen::VectorXd& hebbian_eigenvalues() const noexcept { return lambda0_; }

  [[nodiscard]] Eigen::VectorXd eigenvalues(double t) const;
  // All N eigenvalues of J(t), ascending, with the N - rank zeros.
  [[nodiscard]] Eigen::VectorXd full_spectrum(double t) const;
  [[nodiscard]] CouplingMatrix coupling(double t) const;
  // J(t) S without forming J(t).
  [[nodiscard]] Eigen::MatrixXd apply(double t, const Eigen::MatrixXd& s) const;
  [[nodiscard]] Eigen::VectorXd diagonal(double t) const;

 private:
  Variant setting_;
  Eigen::MatrixXd modes_;
  Eigen::VectorXd lambda0_;
};

// J(t) = (1/D_N) X^T (1+t)(1 + tC)^{-1} X. t may be kProjectorTime.
CouplingMatrix build_coupling(const InformationMatrix& info, double t);

// Fixed-step RK4 for dJ/dt = (J - J^2) / (1+t), starting from a t = 0 coupling.
CouplingMatrix integrate_dreaming_ode(const CouplingMatrix& j0, double t_final, int steps);

struct SpectrumResult {
  Eigen::VectorXd values;                 // ascending
  std::optional<Eigen::MatrixXd> vectors;  // columns, matching values
};

// Symmetric eigensolver front-end. On failure throws NumericalError naming
// a file where the offending matrix was dumped.
SpectrumResult spectrum(const CouplingMatrix& j, bool with_vectors = false);

// Applies J(t) to a block of configurations (columns). Either a factored
// Hebbian X^T (X S) / D_N, a spectral V g V^T S, or a dense matrix.
class CouplingOperator {
 public:
  static CouplingOperator hebbian(const InformationMatrix& info);
  static CouplingOperator spectral(const DreamingKernel& kernel, double t);
  static CouplingOperator dense(CouplingMatrix j);
  // Cheapest representation for this information matrix and time.
  static CouplingOperator make(const InformationMatrix& info, double t);

  [[nodiscard]] Index neurons() const noexcept;
  [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& s) const;
  [[nodiscard]] const Eigen::VectorXd& diagonal() const noexcept { return diagonal_; }

 private:
  struct Factored {
    Eigen::MatrixXd left;  // N x k
    Eigen::VectorXd weights;
  };
  CouplingOperator() = default;

  std::variant<Factored, Eigen::MatrixXd> repr_;
  Eigen::VectorXd diagonal_;
};

// Row-major float64 dump with a `<path>.json` sidecar {N, t, setting, seed}.
void write_coupling(const std::filesystem::path& path, const CouplingMatrix& j, std::uint64_t seed);
CouplingMatrix read_coupling(const std::filesystem::path& path);

}  // namespace dreamhop
