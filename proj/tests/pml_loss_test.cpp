#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "pml/pml_loss.hpp"

using namespace pml;

namespace {

oracle::Vec as_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd random_vector(std::mt19937_64& rng, Index n, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  VectorXd v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(PredictMargined, ZeroMarginsReduceToSoftmax) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Index c = 2 + trial % 15;
    const VectorXd s = random_vector(rng, c, 3.0);
    const auto pred = predict_margined<double>(s, VectorXd::Zero(c));
    const auto p = oracle::softmax(as_vec(s));
    for (Index k = 0; k < c; ++k) EXPECT_NEAR(pred.components[k], p[static_cast<std::size_t>(k)], 1e-15);
    EXPECT_NEAR(pred.components.sum(), 1.0, 1e-12);
  }
}

TEST(PredictMargined, ComponentsMatchDefinition) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Index c = 2 + trial % 10;
    const VectorXd s = random_vector(rng, c, 2.0);
    const VectorXd m = random_vector(rng, c, 0.5);
    const auto pred = predict_margined<double>(s, m);
    for (Index k = 0; k < c; ++k) {
      const double expected = oracle::margined_component(as_vec(s), as_vec(m), static_cast<std::size_t>(k));
      EXPECT_NEAR(pred.components[k], expected, 1e-14);
      EXPECT_GT(pred.components[k], 0.0);
      EXPECT_LT(pred.components[k], 1.0);
    }
  }
}

TEST(PredictMargined, PositiveMarginLowersOnlyItsComponent) {
  const VectorXd s{{0.2, 1.0, -0.5, 0.3}};
  const auto base = predict_margined<double>(s, VectorXd::Zero(4));
  VectorXd m = VectorXd::Zero(4);
  m[1] = 0.4;
  const auto shifted = predict_margined<double>(s, m);
  EXPECT_LT(shifted.components[1], base.components[1]);
  for (Index k : {0, 2, 3}) EXPECT_EQ(shifted.components[k], base.components[k]);
}

TEST(PredictMargined, StableForLargeLogits) {
  const VectorXd s{{800.0, 799.0, -800.0}};
  const auto pred = predict_margined<double>(s, VectorXd{{0.5, 0.0, 0.0}});
  EXPECT_TRUE(pred.components.allFinite());
  EXPECT_TRUE(pred.log_components.allFinite());
  EXPECT_NEAR(pred.log_components[0], 0.5 - 1.0 - std::log(std::exp(-0.5) + std::exp(-1.0)), 1e-12);
}

TEST(PredictMargined, RejectsBadInput) {
  EXPECT_THROW(predict_margined<double>(VectorXd::Zero(3), VectorXd::Zero(2)), ShapeError);
  EXPECT_THROW(predict_margined<double>(VectorXd{{0.0, std::nan("")}}, VectorXd::Zero(2)), NumericError);
}

TEST(PmlLoss, ZeroMarginsMatchSoftmaxKl) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + trial % 20;
    const auto target = encode(trial % c, 0.5 + (trial % 4), c);
    const VectorXd s = random_vector(rng, c, 2.0);
    const auto a = pml_loss(target, predict_margined<double>(s, VectorXd::Zero(c)));
    const auto b = softmax_kl(target, s);
    EXPECT_NEAR(a.loss, b.loss, 1e-12);
    EXPECT_LT((a.d_logits - b.d_logits).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PmlLoss, MatchesCrossEntropyOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int c = 3 + trial % 8;
    const auto target = encode(trial % c, 1.0, c);
    const VectorXd s = random_vector(rng, c, 1.0);
    const VectorXd m = random_vector(rng, c, 0.3);
    oracle::Vec p(static_cast<std::size_t>(c));
    for (int k = 0; k < c; ++k) p[static_cast<std::size_t>(k)] = oracle::margined_component(as_vec(s), as_vec(m), static_cast<std::size_t>(k));
    const auto r = pml_loss(target, predict_margined<double>(s, m));
    EXPECT_NEAR(r.loss, oracle::cross_entropy(as_vec(target.probs), p), 1e-12);
  }
}

TEST(PmlLoss, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int c = 3 + trial % 10;
    const auto target = encode(trial % c, 1.5, c);
    VectorXd s = random_vector(rng, c, 1.5);
    VectorXd m = random_vector(rng, c, 0.4);
    auto loss = [&] { return pml_loss(target, predict_margined<double>(s, m)).loss; };
    const auto r = pml_loss(target, predict_margined<double>(s, m));
    for (Index k = 0; k < c; ++k) {
      EXPECT_LT(oracle::relative_error(r.d_logits[k], oracle::central_difference(s[k], loss, 1e-6)), 1e-4);
      EXPECT_LT(oracle::relative_error(r.d_margins[k], oracle::central_difference(m[k], loss, 1e-6)), 1e-4);
    }
  }
}

TEST(PmlLoss, MarginGradientMatchesExtendedPrecisionDifferences) {
  using Ld = long double;
  std::mt19937_64 rng(15);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + trial % 12;
    const auto target = encode<Ld>(trial % c, 0.5L + (trial % 5), c);
    Vector<Ld> s(c);
    Vector<Ld> m(c);
    for (Index k = 0; k < c; ++k) {
      s[k] = 1.5L * n(rng);
      m[k] = 0.5L * n(rng);
    }
    const auto r = pml_loss(target, predict_margined<Ld>(s, m));
    // Difference noise in long double is near 1e-13, so tiny target tails are compared absolutely.
    const Ld h = 1e-6L;
    for (Index k = 0; k < c; ++k) {
      const Ld saved = m[k];
      m[k] = saved + h;
      const Ld up = pml_loss(target, predict_margined<Ld>(s, m)).loss;
      m[k] = saved - h;
      const Ld down = pml_loss(target, predict_margined<Ld>(s, m)).loss;
      m[k] = saved;
      const Ld fd = (up - down) / (2 * h);
      const Ld scale = std::max({std::abs(r.d_margins[k]), std::abs(fd), 1e-6L});
      EXPECT_LT(static_cast<double>(std::abs(r.d_margins[k] - fd) / scale), 1e-6) << trial << "/" << k;
    }
  }
}

TEST(PmlLoss, MarginGradientIsNonnegative) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 4;
    const auto target = encode(trial % c, 1.0, c);
    const auto r = pml_loss(target, predict_margined<double>(random_vector(rng, c, 2.0), random_vector(rng, c, 1.0)));
    EXPECT_GE(r.d_margins.minCoeff(), 0.0);
    EXPECT_GE(r.loss, 0.0);
  }
}

TEST(PmlLossMean, AveragesLossAndScalesGradients) {
  std::mt19937_64 rng(7);
  std::vector<LabelDistribution<double>> targets;
  std::vector<MarginedPrediction<double>> preds;
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    targets.push_back(encode(i, 1.0, 5));
    preds.push_back(predict_margined<double>(random_vector(rng, 5, 1.0), random_vector(rng, 5, 0.2)));
    sum += pml_loss(targets.back(), preds.back()).loss;
  }
  const auto batch = pml_loss_mean<double>(targets, preds);
  EXPECT_NEAR(batch.loss, sum / 4.0, 1e-14);
  ASSERT_EQ(batch.samples.size(), 4u);
  const auto one = pml_loss(targets[2], preds[2]);
  EXPECT_LT((batch.samples[2].d_logits - one.d_logits / 4.0).cwiseAbs().maxCoeff(), 1e-16);
  EXPECT_THROW(pml_loss_mean<double>({}, {}), ShapeError);
}
