#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pml/label_codec.hpp"

using namespace pml;

TEST(Encode, UnnormalizedPeakMatchesScalarDensity) {
  const VectorXd y = encode_unnormalized(30, 2.0, 101);
  // 1 / (2 sqrt(2 pi)), evaluated independently.
  const double expected = 1.0 / (2.0 * std::sqrt(2.0 * 3.14159265358979323846));
  EXPECT_NEAR(y[30], expected, 1e-15);
  EXPECT_NEAR(y[30], 0.199471, 1e-6);
}

TEST(Encode, SymmetricAroundTheAge) {
  for (int age : {0, 7, 50, 100}) {
    for (double sigma : {0.3, 2.0, 9.0}) {
      const auto y = encode(age, sigma, 101);
      for (int d = 1; age - d >= 0 && age + d <= 100; ++d) EXPECT_EQ(y.probs[age - d], y.probs[age + d]);
    }
  }
}

TEST(Encode, NarrowSigmaConcentratesMass) {
  const auto y = encode(5, 0.1, 10);
  EXPECT_GE(y.probs[5], 0.999);
}

TEST(Encode, NormalizedNonnegativeWithArgmaxAtAge) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> sig(0.2, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(rng() % 120);
    const int age = static_cast<int>(rng() % static_cast<unsigned>(c));
    const auto y = encode(age, sig(rng), c);
    EXPECT_NEAR(y.probs.sum(), 1.0, 1e-12);
    EXPECT_GE(y.probs.minCoeff(), 0.0);
    Index best = 0;
    y.probs.maxCoeff(&best);
    EXPECT_EQ(best, age);
  }
}

TEST(Encode, TranslationCovariantAwayFromBoundaries) {
  const auto a = encode(40, 2.5, 101);
  const auto b = encode(41, 2.5, 101);
  for (int k = 20; k < 60; ++k) EXPECT_LT(std::abs(a.probs[k] - b.probs[k + 1]), 1e-9);
}

TEST(Encode, RejectsBadArguments) {
  EXPECT_THROW(encode(-1, 2.0, 10), RangeError);
  EXPECT_THROW(encode(10, 2.0, 10), RangeError);
  EXPECT_THROW(encode(3, 0.0, 10), DomainError);
  EXPECT_THROW(encode(3, -1.0, 10), DomainError);
  EXPECT_THROW(encode(0, 1.0, 1), DomainError);
}

TEST(Decode, ExpectationOfSimpleDistributions) {
  VectorXd one_hot = VectorXd::Zero(12);
  one_hot[7] = 1.0;
  EXPECT_EQ(decode_expectation(one_hot), 7.0);
  EXPECT_NEAR(decode_expectation(VectorXd(VectorXd::Constant(11, 1.0 / 11.0))), 5.0, 1e-12);
  EXPECT_EQ(decode_argmax(one_hot), 7.0);
}

TEST(Decode, ExpectationInvertsInteriorEncoding) {
  EXPECT_NEAR(decode_expectation(encode(30, 2.0, 101).probs), 30.0, 1e-9);
  for (double sigma : {0.5, 1.0, 2.0, 3.5}) {
    const int c = 80;
    for (int a = 0; a < c; ++a) {
      if (a - 8 * sigma < 0 || a + 8 * sigma > c - 1) continue;
      EXPECT_NEAR(decode_expectation(encode(a, sigma, c).probs), a, 1e-6) << a << " " << sigma;
    }
  }
}

// Near a boundary the truncated tail pulls the mean inward; the decoder must
// report exactly that mean.
TEST(Decode, MatchesTruncatedGaussianMean) {
  for (double sigma : {0.5, 2.0, 3.5}) {
    for (int a : {0, 3, 8, 14}) {
      const int c = 40;
      double z = 0.0;
      double m = 0.0;
      for (int k = 0; k < c; ++k) {
        const double w = oracle::discretized_gaussian(a, sigma, k, 1.0);
        z += w;
        m += k * w;
      }
      EXPECT_NEAR(decode_expectation(encode(a, sigma, c).probs), m / z, 1e-12);
    }
  }
}

TEST(Decode, RejectsInvalidDistributions) {
  EXPECT_THROW(decode_expectation(VectorXd{{0.5, 0.6}}), DomainError);
  EXPECT_THROW(decode_expectation(VectorXd{{1.5, -0.5}}), DomainError);
}

TEST(KlLoss, AnalyticValues) {
  const auto target = encode(3, 1e-3, 8);  // numerically one-hot
  VectorXd one_hot = VectorXd::Zero(8);
  one_hot[3] = 1.0;
  LabelDistribution<double> hard{one_hot, 1.0, 3};
  EXPECT_EQ(kl_loss(hard, one_hot), 0.0);
  EXPECT_NEAR(kl_loss(hard, VectorXd(VectorXd::Constant(8, 1.0 / 8.0))), std::log(8.0), 1e-12);
  EXPECT_NEAR(target.probs[3], 1.0, 1e-12);
}

TEST(KlLoss, MatchesSummationOracle) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 3 + trial % 20;
    VectorXd p(c);
    for (auto& v : p) v = u(rng);
    p /= p.sum();
    const auto target = encode(trial % c, 1.0 + trial % 3, c);
    const oracle::Vec y(target.probs.data(), target.probs.data() + c);
    const oracle::Vec q(p.data(), p.data() + c);
    EXPECT_NEAR(kl_loss(target, p), oracle::cross_entropy(y, q), 1e-12);
  }
}

TEST(KlLoss, NonnegativeExcessOverTargetEntropy) {
  // Cross-entropy minus the target's entropy is the KL divergence, zero only on a match.
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto target = encode(trial % 9, 1.5, 9);
    VectorXd p(9);
    for (auto& v : p) v = u(rng);
    p /= p.sum();
    const double entropy = kl_loss(target, target.probs);
    EXPECT_GT(kl_loss(target, p) - entropy, 0.0);
    EXPECT_EQ(kl_loss(target, target.probs) - entropy, 0.0);
  }
}

TEST(KlLoss, ZeroPredictionUnderNonzeroTargetIsRejected) {
  const auto target = encode(1, 1.0, 3);
  EXPECT_THROW(kl_loss(target, VectorXd{{0.5, 0.5, 0.0}}), NumericError);
}

TEST(SoftmaxKl, GradientIsProbabilitiesMinusTarget) {
  const auto target = encode(2, 1.0, 5);
  const VectorXd s{{0.1, -0.3, 2.0, 0.5, -1.0}};
  const auto r = softmax_kl(target, s);
  const auto p = oracle::softmax(oracle::Vec(s.data(), s.data() + 5));
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(r.d_logits[k], p[static_cast<std::size_t>(k)] - target.probs[k], 1e-15);
}
