#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pml/class_stats.hpp"

using namespace pml;

namespace {

struct Stream {
  std::vector<oracle::Vec> xs;
  std::vector<int> labels;
};

Stream random_stream(std::mt19937_64& rng, int n, int classes, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Stream s;
  for (int i = 0; i < n; ++i) {
    const int j = static_cast<int>(rng() % static_cast<unsigned>(classes));
    oracle::Vec x(static_cast<std::size_t>(dim));
    for (int d = 0; d < dim; ++d) x[static_cast<std::size_t>(d)] = normal(rng) + 0.5 * j;
    s.xs.push_back(x);
    s.labels.push_back(j);
  }
  return s;
}

VectorXd to_eigen(const oracle::Vec& v) { return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size())); }

}  // namespace

TEST(UpdateCenter, FirstSampleIsTheCenter) {
  ClassStatsBank<double> bank(3, 2);
  bank.update_center(1, VectorXd{{1.0, 0.0}});
  EXPECT_EQ(bank.centers().row(1), (Eigen::RowVector2d{1.0, 0.0}));
  EXPECT_EQ(bank.count(1), 1);
  EXPECT_EQ(bank.count(0), 0);
  EXPECT_TRUE((bank.centers().row(0).array() == 0.0).all());
}

TEST(UpdateCenter, TwoSamplesAverage) {
  ClassStatsBank<double> bank(2, 2);
  bank.update_center(0, VectorXd{{1.0, 0.0}});
  bank.update_center(0, VectorXd{{3.0, 0.0}});
  EXPECT_EQ(bank.centers().row(0), (Eigen::RowVector2d{2.0, 0.0}));
}

TEST(UpdateCenter, RejectsNonFiniteAndLeavesBankUnchanged) {
  ClassStatsBank<double> bank(2, 2);
  bank.observe(0, VectorXd{{1.0, 2.0}});
  const auto before = bank.snapshot();
  EXPECT_THROW(bank.update_center(0, VectorXd{{std::nan(""), 0.0}}), DomainError);
  EXPECT_THROW(bank.observe(1, VectorXd{{INFINITY, 0.0}}), DomainError);
  EXPECT_EQ(bank.snapshot().values, before.values);
  EXPECT_EQ(bank.total_count(), 1);
  EXPECT_THROW(bank.observe(2, VectorXd{{1.0, 1.0}}), RangeError);
  EXPECT_THROW(bank.observe(0, VectorXd{{1.0}}), ShapeError);
}

TEST(UpdateCenter, MatchesBatchMeanUnderAnyPermutation) {
  std::mt19937_64 rng(21);
  const Stream s = random_stream(rng, 1000, 5, 4);
  const auto means = oracle::batch_means(s.xs, s.labels, 5);
  std::vector<std::size_t> order(s.xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int perm = 0; perm < 3; ++perm) {
    std::shuffle(order.begin(), order.end(), rng);
    ClassStatsBank<double> bank(5, 4);
    for (auto i : order) bank.observe(s.labels[i], to_eigen(s.xs[i]));
    for (int j = 0; j < 5; ++j)
      for (int d = 0; d < 4; ++d) EXPECT_NEAR(bank.centers()(j, d), means[j][d], 1e-9);
    EXPECT_EQ(bank.total_count(), 1000);
  }
}

TEST(UpdateIntra, FirstSampleAndRepeatedPointContributeNothing) {
  ClassStatsBank<double> bank(2, 3);
  bank.observe(0, VectorXd{{1.0, 2.0, 3.0}});
  EXPECT_EQ(bank.intra_accumulator()[0], 0.0);
  bank.observe(0, VectorXd{{1.0, 2.0, 3.0}});
  EXPECT_EQ(bank.intra_accumulator()[0], 0.0);
  EXPECT_EQ(bank.intra()[0], 0.0);
}

TEST(UpdateIntra, MatchesTermByTermReplay) {
  std::mt19937_64 rng(22);
  const Stream s = random_stream(rng, 600, 6, 5);
  ClassStatsBank<double> bank(6, 5);
  for (std::size_t i = 0; i < s.xs.size(); ++i) bank.observe(s.labels[i], to_eigen(s.xs[i]));
  const auto replay = oracle::intra_replay(s.xs, s.labels, 6);
  for (int j = 0; j < 6; ++j) {
    EXPECT_NEAR(bank.intra_accumulator()[j], replay[static_cast<std::size_t>(j)], 1e-6);
    EXPECT_GE(bank.intra_accumulator()[j], 0.0);
    EXPECT_NEAR(bank.intra()[j], replay[static_cast<std::size_t>(j)] / bank.count(j), 1e-6);
  }
}

TEST(UpdateIntra, StandaloneOperationUsesBothCenters) {
  ClassStatsBank<double> bank(1, 2);
  const VectorXd a{{1.0, 0.0}};
  const VectorXd b{{0.0, 1.0}};
  bank.observe(0, a);
  const VectorXd before = bank.update_center(0, b);
  const VectorXd after = bank.centers().row(0).transpose();
  bank.update_intra(0, b, before, after);
  // d(b, a) = 1; d(b, (0.5, 0.5)) = 1 - 1/sqrt(2)
  EXPECT_NEAR(bank.intra_accumulator()[0], 1.0 * (1.0 - 1.0 / std::sqrt(2.0)), 1e-15);
}

TEST(InterVariance, GeometricCases) {
  ClassStatsBank<double> bank(3, 2);
  bank.observe(0, VectorXd{{1.0, 0.0}});
  bank.observe(1, VectorXd{{0.0, 2.0}});
  bank.observe(2, VectorXd{{-3.0, 0.0}});
  const VectorXd row = bank.inter_variance(0);
  EXPECT_EQ(row[0], 0.0);
  EXPECT_NEAR(row[1], 1.0, 1e-15);
  EXPECT_NEAR(row[2], 2.0, 1e-15);
  EXPECT_EQ(bank.inter().row(0).transpose(), row);
}

TEST(InterVariance, ZeroCenterConventionCountsDegenerateDistances) {
  ClassStatsBank<double> bank(3, 2);
  bank.observe(0, VectorXd{{1.0, 0.0}});
  EXPECT_EQ(bank.inter_variance(0)[1], 0.0);
  EXPECT_GT(bank.degenerate_distances(), 0);
  bank.reset_degenerate_counter();
  EXPECT_EQ(bank.degenerate_distances(), 0);
}

TEST(InterVariance, SymmetricZeroDiagonalBoundedAfterStreams) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const Stream s = random_stream(rng, 200, 7, 3);
    ClassStatsBank<double> bank(7, 3);
    for (std::size_t i = 0; i < s.xs.size(); ++i) bank.observe(s.labels[i], to_eigen(s.xs[i]));
    const MatrixXd& psi = bank.inter();
    EXPECT_LT((psi - psi.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_TRUE((psi.diagonal().array() == 0.0).all());
    EXPECT_GE(psi.minCoeff(), 0.0);
    EXPECT_LE(psi.maxCoeff(), 2.0);
    for (int j = 0; j < 7; ++j) {
      const VectorXd fresh = bank.inter_variance(j);
      EXPECT_LT((fresh - psi.row(j).transpose()).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Snapshot, ColumnLayout) {
  ClassStatsBank<double> bank(2, 3);
  bank.observe(0, VectorXd{{1.0, 2.0, 3.0}});
  bank.observe(0, VectorXd{{3.0, 2.0, 1.0}});
  bank.observe(1, VectorXd{{0.0, 1.0, 0.0}});
  const auto snap = bank.snapshot(2);
  ASSERT_EQ(snap.width(), 3 + 1 + 2);
  EXPECT_EQ(snap.centers().row(0), bank.centers().row(0));
  EXPECT_EQ(snap.intra()[0], bank.intra()[0]);
  EXPECT_EQ(snap.inter(), bank.inter());
  EXPECT_EQ(snap.tag.stage, 2);
  EXPECT_EQ(snap.tag.iteration, 3);
}

TEST(Residual, SelfResidualIsZeroAndShapesMustMatch) {
  ClassStatsBank<double> bank(3, 2);
  bank.observe(1, VectorXd{{1.0, 1.0}});
  const auto snap = bank.snapshot();
  EXPECT_TRUE((residual(snap, snap).array() == 0.0).all());
  EXPECT_THROW(residual(snap, StatsSnapshot<double>::zeros(4, 2)), ShapeError);
}

TEST(Residual, PerturbingOneCenterCoordinateChangesOneEntry) {
  ClassStatsBank<double> bank(3, 2);
  bank.observe(1, VectorXd{{1.0, 1.0}});
  const auto a = bank.snapshot();
  auto b = a;
  b.values(1, 0) += 0.25;
  const MatrixXd r = residual(b, a);
  EXPECT_EQ((r.array() != 0.0).count(), 1);
  EXPECT_EQ(r(1, 0), 0.25);
}

TEST(Residual, OneUpdateTouchesOnlyItsRowAndInterEntries) {
  std::mt19937_64 rng(24);
  const Stream s = random_stream(rng, 50, 4, 3);
  ClassStatsBank<double> bank(4, 3);
  for (std::size_t i = 0; i < s.xs.size(); ++i) bank.observe(s.labels[i], to_eigen(s.xs[i]));
  const auto before = bank.snapshot();
  const int j = 2;
  bank.observe(j, VectorXd{{0.3, -1.0, 2.0}});
  const MatrixXd r = residual(bank.snapshot(), before);
  for (Index row = 0; row < 4; ++row) {
    for (Index col = 0; col < r.cols(); ++col) {
      const bool center_or_intra = col <= 3;
      const bool inter_with_j = col > 3 && (row == j || col - 4 == j);
      if (row == j ? (center_or_intra || inter_with_j) : inter_with_j) continue;
      EXPECT_EQ(r(row, col), 0.0) << row << "," << col;
    }
  }
  EXPECT_NE(r.row(j).leftCols(3).cwiseAbs().sum(), 0.0);
}

TEST(ClassStatsCsv, OneRowPerClass) {
  ClassStatsBank<double> bank(2, 2);
  bank.observe(0, VectorXd{{1.0, 0.0}});
  std::ostringstream out;
  bank.write_csv(out);
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "class,count,center_0,center_1,intra,inter_0,inter_1");
  EXPECT_NE(text.find("\n0,1,1,0,0,0,0\n"), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
