#pragma once

// Gaussian label distributions over integer ages, and the decoders and
// cross-entropy used to compare them with predicted distributions.

#include <cmath>
#include <numbers>
#include <string>

#include "pml/errors.hpp"
#include "pml/types.hpp"

namespace pml {

inline constexpr double kLogFloor = 1e-300;

template <typename Scalar>
struct LabelDistribution {
  Vector<Scalar> probs;
  Scalar sigma{};
  int true_age = 0;

  Index classes() const { return probs.size(); }
};

// Gaussian density with the 1/(sigma sqrt(2 pi)) prefactor, before renormalization.
template <typename Scalar>
Scalar gaussian_label_density(Scalar k, Scalar age, Scalar sigma) {
  using std::exp, std::sqrt;
  const Scalar diff = k - age;
  return exp(-diff * diff / (Scalar(2) * sigma * sigma)) /
         (sigma * sqrt(Scalar(2) * std::numbers::pi_v<Scalar>));
}

template <typename Scalar>
Vector<Scalar> encode_unnormalized(int age, Scalar sigma, Index classes) {
  if (classes < 2) throw DomainError("label encoding needs at least 2 classes");
  if (!(sigma > Scalar(0))) throw DomainError("label sigma must be positive");
  if (age < 0 || age >= classes) {
    throw RangeError("age " + std::to_string(age) + " outside [0, " + std::to_string(classes - 1) +
                     "]");
  }
  Vector<Scalar> y(classes);
  for (Index k = 0; k < classes; ++k) {
    y[k] = gaussian_label_density(static_cast<Scalar>(k), static_cast<Scalar>(age), sigma);
  }
  return y;
}

// The truncated integer support does not integrate to one, so the density
// values are renormalized.
template <typename Scalar>
LabelDistribution<Scalar> encode(int age, Scalar sigma, Index classes) {
  Vector<Scalar> y = encode_unnormalized(age, sigma, classes);
  y /= y.sum();
  return {std::move(y), sigma, age};
}

template <typename Scalar>
void validate_distribution(const Vector<Scalar>& probs, double tolerance = 1e-9) {
  if (probs.size() == 0) throw DomainError("empty probability vector");
  for (Index k = 0; k < probs.size(); ++k) {
    if (!std::isfinite(static_cast<double>(probs[k])) || probs[k] < Scalar(0)) {
      throw DomainError("probability component " + std::to_string(k) + " is negative or non-finite");
    }
  }
  const double sum = static_cast<double>(probs.sum());
  if (std::abs(sum - 1.0) > tolerance) {
    throw DomainError("probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

// Expected class index under probs.
template <typename Scalar>
Scalar decode_expectation(const Vector<Scalar>& probs) {
  validate_distribution(probs);
  Scalar age(0);
  for (Index k = 0; k < probs.size(); ++k) age += static_cast<Scalar>(k) * probs[k];
  return age;
}

// Index of the largest component; ties resolve to the lowest index.
template <typename Scalar>
Scalar decode_argmax(const Vector<Scalar>& probs) {
  validate_distribution(probs);
  Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<Scalar>(best);
}

template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits) {
  const Scalar shift = logits.maxCoeff();
  Vector<Scalar> p = (logits.array() - shift).exp().matrix();
  return p / p.sum();
}

// -sum_k y_k log p_k; the target's own entropy is a constant and dropped.
template <typename Scalar>
Scalar kl_loss(const LabelDistribution<Scalar>& target, const Vector<Scalar>& predicted) {
  if (predicted.size() != target.classes()) {
    throw ShapeError(shape_message("predicted distribution", target.classes(), predicted.size()));
  }
  Scalar loss(0);
  for (Index k = 0; k < predicted.size(); ++k) {
    const Scalar yk = target.probs[k];
    if (yk == Scalar(0)) continue;
    if (!(predicted[k] > Scalar(0))) {
      throw NumericError("predicted component " + std::to_string(k) +
                         " is zero where the target is nonzero");
    }
    using std::log, std::max;
    loss -= yk * log(max(predicted[k], static_cast<Scalar>(kLogFloor)));
  }
  return loss;
}

template <typename Scalar>
struct SoftmaxKl {
  Scalar loss{};
  Vector<Scalar> probs;
  Vector<Scalar> d_logits;
};

// kl_loss on softmax(logits) together with its gradient p - y with respect
// to the logits (valid because the target sums to one).
template <typename Scalar>
SoftmaxKl<Scalar> softmax_kl(const LabelDistribution<Scalar>& target, const Vector<Scalar>& logit_vec) {
  SoftmaxKl<Scalar> out;
  out.probs = softmax(logit_vec);
  out.loss = kl_loss(target, out.probs);
  out.d_logits = out.probs * target.probs.sum() - target.probs;
  return out;
}

}  // namespace pml
