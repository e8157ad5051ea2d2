#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "dreamhop/coupling.hpp"
#include "dreamhop/errors.hpp"
#include "dreamhop/simulation.hpp"

using namespace dreamhop;

namespace {

// J(t) = (1/D) X^T (1+t) (I + t X X^T / D)^{-1} X by explicit inversion.
Eigen::MatrixXd brute_coupling(const Eigen::MatrixXd& x, double d, double t) {
  const Eigen::MatrixXd c = x * x.transpose() / d;
  const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(c.rows(), c.cols()) + t * c).inverse();
  return (1.0 + t) * x.transpose() * inv * x / d;
}

Eigen::MatrixXd as_double(const SpinMatrix& m) { return m.cast<double>(); }

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Sylvester construction of a 2^k Hadamard matrix.
SpinMatrix hadamard(int k) {
  SpinMatrix h(1, 1);
  h(0, 0) = 1;
  for (int s = 0; s < k; ++s) {
    SpinMatrix next(2 * h.rows(), 2 * h.cols());
    next << h, h, h, (-h.array()).matrix();
    h = next;
  }
  return h;
}

}  // namespace

TEST(Coupling, StoringMatchesDirectInverse) {
  const auto gt = make_ground_truths(60, 15, RngSpec{1, 0});
  const auto info = build_information_matrix(gt);
  for (double t : {0.0, 0.3, 1.0, 10.0, 1000.0}) {
    const auto j = build_coupling(info, t);
    EXPECT_LT(max_abs(j.matrix - brute_coupling(as_double(gt.patterns), 60.0, t)), 1e-10) << "t = " << t;
  }
}

TEST(Coupling, SupervisedUsesClassMeans) {
  const auto gt = make_ground_truths(40, 6, RngSpec{2, 0});
  const auto ex = make_examples(gt, 9, 0.5, RngSpec{2, 1});
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(6, 40);
  for (Index mu = 0; mu < 6; ++mu) {
    for (Index a = 0; a < 9; ++a) {
      for (Index i = 0; i < 40; ++i) means(mu, i) += ex.examples(ex.row_of(mu, a), i) / 9.0;
    }
  }
  const auto info = build_information_matrix(ex, Variant::Supervised);
  EXPECT_DOUBLE_EQ(info.normalization(), 40.0);
  for (double t : {0.0, 2.0, 10.0}) {
    EXPECT_LT(max_abs(build_coupling(info, t).matrix - brute_coupling(means, 40.0, t)), 1e-10);
  }
}

TEST(Coupling, UnsupervisedHebbianIsTheExampleDoubleSum) {
  const Index n = 30;
  const Index p = 3;
  const Index m = 20;  // P M > N: packed representation
  const auto gt = make_ground_truths(n, p, RngSpec{3, 0});
  const auto ex = make_examples(gt, m, 0.4, RngSpec{3, 1});
  const auto info = build_information_matrix(ex, Variant::Unsupervised);
  EXPECT_TRUE(info.is_packed());
  Eigen::MatrixXd oracle = Eigen::MatrixXd::Zero(n, n);
  for (Index mu = 0; mu < p; ++mu) {
    for (Index a = 0; a < m; ++a) {
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          oracle(i, j) += ex.examples(ex.row_of(mu, a), i) * ex.examples(ex.row_of(mu, a), j);
        }
      }
    }
  }
  oracle /= static_cast<double>(n * m);
  EXPECT_LT(max_abs(build_coupling(info, 0.0).matrix - oracle), 1e-12);
  for (double t : {0.5, 10.0}) {
    EXPECT_LT(max_abs(build_coupling(info, t).matrix - brute_coupling(as_double(ex.examples), double(n * m), t)),
              1e-9);
  }
}

TEST(Coupling, UnsupervisedDenseAndPackedPathsAgree) {
  // P M < N keeps X dense; the kernel then comes from C.
  const auto gt = make_ground_truths(80, 4, RngSpec{4, 0});
  const auto ex = make_examples(gt, 5, 0.7, RngSpec{4, 1});
  const auto info = build_information_matrix(ex, Variant::Unsupervised);
  EXPECT_FALSE(info.is_packed());
  for (double t : {0.0, 3.0}) {
    EXPECT_LT(max_abs(build_coupling(info, t).matrix - brute_coupling(as_double(ex.examples), 80.0 * 5.0, t)), 1e-10);
  }
}

TEST(PackedSpinColumns, GramMatchesDense) {
  for (Index rows : {1, 63, 64, 65, 200}) {
    const auto gt = make_ground_truths(std::max<Index>(rows, 17), rows, RngSpec{5, static_cast<std::uint64_t>(rows)});
    SpinMatrix m = gt.patterns.leftCols(17);
    const PackedSpinColumns packed(m);
    const Eigen::MatrixXd x = m.cast<double>();
    EXPECT_TRUE(packed.dense().isApprox(x));
    EXPECT_LT(max_abs(packed.column_gram() - x.transpose() * x), 1e-12) << rows;
  }
}

TEST(Coupling, OrthogonalPatternsAreFixedByDreaming) {
  // Hadamard rows are orthogonal, so C = I and every J(t) equals J(0).
  const SpinMatrix h = hadamard(4);
  const auto info = build_information_matrix(GroundTruthSet{h.topRows(8)});
  EXPECT_LT(max_abs(info.correlation() - Eigen::MatrixXd::Identity(8, 8)), 1e-14);
  const auto j0 = build_coupling(info, 0.0).matrix;
  for (double t : {0.5, 10.0, kProjectorTime}) EXPECT_LT(max_abs(build_coupling(info, t).matrix - j0), 1e-12);
}

TEST(Coupling, ExactlySymmetric) {
  const auto gt = make_ground_truths(50, 20, RngSpec{6, 0});
  const auto info = build_information_matrix(gt);
  for (double t : {0.0, 1.0, 7.0, kProjectorTime}) {
    const auto j = build_coupling(info, t).matrix;
    EXPECT_EQ(max_abs(j - j.transpose()), 0.0);
  }
}

TEST(EigenMap, RoundTripAndFixedPoints) {
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> lam(0.0, 5.0);
  std::uniform_real_distribution<double> time(0.0, 50.0);
  for (int k = 0; k < 1000; ++k) {
    const double l0 = lam(eng);
    const double t = time(eng);
    const double l = eigen_map(l0, t);
    EXPECT_NEAR(eigen_map_inverse(l, t), l0, 1e-9 * (1.0 + l0));
    EXPECT_LE(l, (1.0 + t) / t + 1e-12);
  }
  for (double t : {0.0, 1.0, 100.0}) {
    EXPECT_DOUBLE_EQ(eigen_map(0.0, t), 0.0);
    EXPECT_DOUBLE_EQ(eigen_map(1.0, t), 1.0);
  }
  EXPECT_DOUBLE_EQ(eigen_map(0.3, kProjectorTime), 1.0);
  EXPECT_DOUBLE_EQ(eigen_map(1e-12, kProjectorTime), 0.0);
  EXPECT_THROW(eigen_map(1.0, -1.0), DomainError);
  EXPECT_THROW(eigen_map_inverse(1.5, 2.0), DomainError);
}

TEST(Coupling, SpectrumFlowsThroughEigenMap) {
  const auto gt = make_ground_truths(120, 30, RngSpec{8, 0});
  const auto info = build_information_matrix(gt);
  const auto l0 = spectrum(build_coupling(info, 0.0)).values;
  for (double t : {0.5, 1.0, 10.0}) {
    const auto lt = spectrum(CouplingMatrix{brute_coupling(as_double(gt.patterns), 120.0, t), t}).values;
    for (Index i = 0; i < l0.size(); ++i) EXPECT_NEAR(lt[i], eigen_map(l0[i], t), 1e-9);
  }
}

TEST(Coupling, EigenvectorsAreSharedAcrossTimes) {
  const auto gt = make_ground_truths(60, 12, RngSpec{9, 0});
  const auto info = build_information_matrix(gt);
  const auto s0 = spectrum(build_coupling(info, 0.0), true);
  const Eigen::MatrixXd jt = build_coupling(info, 4.0).matrix;
  for (Index k = 0; k < s0.values.size(); ++k) {
    const Eigen::VectorXd v = s0.vectors->col(k);
    const double expected = s0.values[k] > kZeroEigenvalueTol ? eigen_map(s0.values[k], 4.0) : 0.0;
    EXPECT_LT((jt * v - expected * v).norm(), 1e-10);
  }
}

TEST(Coupling, NullSpaceHasDimensionNMinusP) {
  const auto gt = make_ground_truths(100, 25, RngSpec{10, 0});
  const auto info = build_information_matrix(gt);
  for (double t : {0.0, 2.0, kProjectorTime}) {
    const auto l = spectrum(build_coupling(info, t)).values;
    Index zeros = 0;
    for (Index i = 0; i < l.size(); ++i) zeros += std::abs(l[i]) < kZeroEigenvalueTol;
    EXPECT_EQ(zeros, 75) << "t = " << t;
  }
}

TEST(Coupling, ProjectorFixesEveryPattern) {
  const auto gt = make_ground_truths(90, 30, RngSpec{11, 0});
  const auto j = build_coupling(build_information_matrix(gt), kProjectorTime);
  for (Index mu = 0; mu < gt.count(); ++mu) {
    const auto xi = gt.pattern(mu);
    EXPECT_LT((j.matrix * xi.as_vector() - xi.as_vector()).norm(), 1e-9);
    EXPECT_EQ(one_step(j, xi), xi);
  }
}

TEST(Coupling, OdeReachesClosedForm) {
  const auto gt = make_ground_truths(40, 8, RngSpec{12, 0});
  const auto info = build_information_matrix(gt);
  const auto ode = integrate_dreaming_ode(build_coupling(info, 0.0), 1.5, 600);
  const auto closed = build_coupling(info, 1.5).matrix;
  EXPECT_LT((ode.matrix - closed).norm(), 1e-8 * closed.norm());
  EXPECT_DOUBLE_EQ(ode.time, 1.5);
}

TEST(CouplingOperator, AllFormsAgreeWithDense) {
  const auto gt = make_ground_truths(70, 10, RngSpec{13, 0});
  const auto ex = make_examples(gt, 12, 0.6, RngSpec{13, 1});
  const Eigen::MatrixXd s = Eigen::MatrixXd::Random(70, 5);
  for (const auto& info : {build_information_matrix(gt), build_information_matrix(ex, Variant::Supervised),
                           build_information_matrix(ex, Variant::Unsupervised)}) {
    const DreamingKernel kernel(info);
    for (double t : {0.0, 2.0, kProjectorTime}) {
      const auto j = build_coupling(info, t);
      const Eigen::MatrixXd expected = j.matrix * s;
      EXPECT_LT(max_abs(CouplingOperator::make(info, t).apply(s) - expected), 1e-10);
      EXPECT_LT(max_abs(CouplingOperator::spectral(kernel, t).apply(s) - expected), 1e-10);
      EXPECT_LT(max_abs(CouplingOperator::dense(j).apply(s) - expected), 1e-12);
      EXPECT_LT(max_abs(CouplingOperator::spectral(kernel, t).diagonal() - j.matrix.diagonal()), 1e-10);
      if (t == 0.0) EXPECT_LT(max_abs(CouplingOperator::hebbian(info).apply(s) - expected), 1e-10);
    }
  }
}

TEST(CouplingDump, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "dreamhop_coupling_test";
  std::filesystem::create_directories(dir);
  const auto info = build_information_matrix(make_ground_truths(25, 5, RngSpec{14, 0}));
  for (double t : {0.0, 3.5, kProjectorTime}) {
    auto j = build_coupling(info, t);
    const auto path = dir / "j.bin";
    write_coupling(path, j, 14);
    EXPECT_EQ(std::filesystem::file_size(path), 25U * 25U * 8U);
    const auto back = read_coupling(path);
    EXPECT_EQ(back.matrix, j.matrix);
    EXPECT_EQ(back.time, j.time);
    EXPECT_EQ(back.setting, Variant::BasicStoring);
  }
  std::filesystem::remove_all(dir);
}

TEST(Coupling, RejectsNegativeTime) {
  const auto info = build_information_matrix(make_ground_truths(10, 2, RngSpec{}));
  EXPECT_THROW(build_coupling(info, -0.5), DomainError);
}
