#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "dreamhop/data_gen.hpp"
#include "dreamhop/errors.hpp"

using namespace dreamhop;

TEST(BinaryConfig, RejectsNonSpinEntries) {
  EXPECT_THROW(BinaryConfig({1, 0, -1}), DomainError);
  EXPECT_THROW(BinaryConfig({2}), DomainError);
  EXPECT_THROW(BinaryConfig(std::vector<std::int8_t>{}), DomainError);
  EXPECT_NO_THROW(BinaryConfig({1, -1, 1}));
}

TEST(BinaryConfig, SignOfZeroIsPlusOne) {
  Eigen::VectorXd v(4);
  v << -2.0, 0.0, 3.0, -0.0;
  const auto s = BinaryConfig::sign_of(v);
  EXPECT_EQ(s[0], -1);
  EXPECT_EQ(s[1], 1);
  EXPECT_EQ(s[2], 1);
  EXPECT_EQ(s[3], 1);
}

TEST(BinaryConfig, HammingAndOverlapAgree) {
  const auto a = sample_rademacher(0.0, 301, RngSpec{3, 0});
  const auto b = sample_rademacher(0.0, 301, RngSpec{3, 1});
  const auto d = static_cast<double>(hamming_distance(a, b));
  EXPECT_DOUBLE_EQ(d, 0.5 * 301 * (1.0 - overlap(a, b)));
  EXPECT_EQ(hamming_distance(a, a), 0);
  EXPECT_DOUBLE_EQ(overlap(a, a), 1.0);
}

TEST(SampleRademacher, MeanMatchesBias) {
  const Index n = 200000;
  for (double p : {-0.5, 0.0, 0.7, 1.0}) {
    const auto s = sample_rademacher(p, n, RngSpec{11, 5});
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) sum += s[i];
    const double sd = std::sqrt((1.0 - p * p) / static_cast<double>(n));
    EXPECT_NEAR(sum / static_cast<double>(n), p, 5.0 * sd + 1e-12) << "p = " << p;
  }
  EXPECT_THROW(sample_rademacher(1.5, 10, RngSpec{}), DomainError);
}

TEST(SampleRademacher, ReproducibleAndStreamSensitive) {
  const auto a = sample_rademacher(0.0, 1000, RngSpec{42, 7});
  const auto b = sample_rademacher(0.0, 1000, RngSpec{42, 7});
  const auto c = sample_rademacher(0.0, 1000, RngSpec{42, 8});
  const auto d = sample_rademacher(0.0, 1000, RngSpec{43, 7});
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_NE(a, d);
}

TEST(RngSpec, ChildrenAreDistinct) {
  const RngSpec root{5, 0};
  EXPECT_EQ(root.child(3), root.child(3));
  EXPECT_NE(root.child(3), root.child(4));
  EXPECT_NE(root.child(0), root);
  EXPECT_NE(RngSpec({5, 1}).child(0), root.child(0));
}

TEST(GroundTruths, ShapeAndDomain) {
  const auto gt = make_ground_truths(64, 16, RngSpec{1, 0});
  EXPECT_EQ(gt.count(), 16);
  EXPECT_EQ(gt.size(), 64);
  for (Index i = 0; i < gt.patterns.size(); ++i) {
    const int v = gt.patterns.data()[i];
    EXPECT_TRUE(v == 1 || v == -1);
  }
  EXPECT_THROW(make_ground_truths(10, 11, RngSpec{}), DomainError);
  EXPECT_THROW(make_ground_truths(10, 0, RngSpec{}), DomainError);
  EXPECT_NO_THROW(make_ground_truths(1, 1, RngSpec{}));
}

TEST(Examples, AreFlipsOfTheirArchetype) {
  const auto gt = make_ground_truths(50, 4, RngSpec{2, 0});
  const auto ex = make_examples(gt, 30, 0.4, RngSpec{2, 1});
  ASSERT_EQ(ex.examples.rows(), 4 * 30);
  for (Index mu = 0; mu < 4; ++mu) {
    for (Index a = 0; a < 30; ++a) {
      for (Index i = 0; i < 50; ++i) {
        EXPECT_EQ(std::abs(ex.examples(ex.row_of(mu, a), i)), 1);
      }
    }
  }
}

TEST(Examples, FlipMeanConvergesToQuality) {
  const auto gt = make_ground_truths(100, 3, RngSpec{4, 0});
  for (double r : {0.0, 0.3, 0.8, 1.0}) {
    const auto ex = make_examples(gt, 2000, r, RngSpec{4, 1});
    double chi = 0.0;
    for (Index mu = 0; mu < 3; ++mu) {
      for (Index a = 0; a < 2000; ++a) {
        for (Index i = 0; i < 100; ++i) chi += ex.examples(ex.row_of(mu, a), i) * gt.patterns(mu, i);
      }
    }
    const double count = 3.0 * 2000.0 * 100.0;
    EXPECT_NEAR(chi / count, r, 5.0 * std::sqrt((1.0 - r * r) / count) + 1e-12) << "r = " << r;
  }
}

TEST(Examples, ClassesAreGeneratedIndependently) {
  // Class mu draws from rng.child(mu): the first class does not depend on
  // how many classes follow.
  const auto gt = make_ground_truths(40, 5, RngSpec{9, 0});
  GroundTruthSet first{gt.patterns.topRows(1)};
  const auto all = make_examples(gt, 7, 0.5, RngSpec{9, 1});
  const auto one = make_examples(first, 7, 0.5, RngSpec{9, 1});
  EXPECT_TRUE((all.examples.topRows(7).array() == one.examples.array()).all());
}

TEST(PerturbOnBall, ExpectedDistance) {
  const Index n = 20000;
  const auto x = sample_rademacher(0.0, n, RngSpec{6, 0});
  for (double p : {0.0, 0.4, 0.9}) {
    const auto y = perturb_on_ball(x, p, RngSpec{6, 1});
    const double d = static_cast<double>(hamming_distance(x, y));
    const double q = 0.5 * (1.0 - p);
    EXPECT_NEAR(d, n * q, 5.0 * std::sqrt(n * q * (1.0 - q)));
  }
  EXPECT_EQ(perturb_on_ball(x, 1.0, RngSpec{6, 2}), x);
  EXPECT_THROW(perturb_on_ball(x, -0.1, RngSpec{}), DomainError);
}

TEST(DatasetDump, RoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "dreamhop_dataset_test";
  std::filesystem::create_directories(dir);
  const auto gt = make_ground_truths(33, 3, RngSpec{8, 0});
  const auto ex = make_examples(gt, 5, 0.6, RngSpec{8, 1});
  const auto path = dir / "data.bin";
  write_dataset(path, DatasetDump{gt, ex, 8, "supervised"});

  EXPECT_EQ(std::filesystem::file_size(path), static_cast<std::uintmax_t>(3 * (1 + 5) * 33));
  std::ifstream side(path.string() + ".json");
  const auto meta = nlohmann::json::parse(side);
  EXPECT_EQ(meta.at("N"), 33);
  EXPECT_EQ(meta.at("P"), 3);
  EXPECT_EQ(meta.at("M"), 5);
  EXPECT_EQ(meta.at("setting"), "supervised");

  const auto back = read_dataset(path);
  EXPECT_TRUE((back.ground_truths.patterns.array() == gt.patterns.array()).all());
  ASSERT_TRUE(back.examples.has_value());
  EXPECT_TRUE((back.examples->examples.array() == ex.examples.array()).all());
  EXPECT_DOUBLE_EQ(back.examples->quality, 0.6);
  EXPECT_EQ(back.seed, 8U);

  // Without examples.
  write_dataset(path, DatasetDump{gt, std::nullopt, 1, "storing"});
  const auto plain = read_dataset(path);
  EXPECT_FALSE(plain.examples.has_value());
  EXPECT_TRUE((plain.ground_truths.patterns.array() == gt.patterns.array()).all());
  std::filesystem::remove_all(dir);
}
