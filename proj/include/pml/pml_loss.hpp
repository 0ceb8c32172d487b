#pragma once

// Margin-adjusted one-vs-all softmax and its cross-entropy against a label
// distribution. Component k lowers only its own logit by m_k:
//
//   p_k = exp(s_k - m_k) / (exp(s_k - m_k) + sum_{t != k} exp(s_t))
//
// so the components do not in general sum to one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pml/errors.hpp"
#include "pml/label_codec.hpp"
#include "pml/types.hpp"

namespace pml {

template <typename Scalar>
struct MarginedPrediction {
  Vector<Scalar> components;
  Vector<Scalar> log_components;
  Vector<Scalar> logits;
  Vector<Scalar> margins;
  // cross(k, t) = exp(s_t) / (exp(s_k - m_k) + sum_{u != k} exp(s_u)) for t != k
  Matrix<Scalar> cross;

  Index classes() const { return components.size(); }
};

template <typename Scalar>
MarginedPrediction<Scalar> predict_margined(const Vector<Scalar>& logit_vec,
                                            const Vector<Scalar>& margins) {
  const Index c = logit_vec.size();
  if (margins.size() != c) throw ShapeError(shape_message("margins", c, margins.size()));
  if (!logit_vec.allFinite() || !margins.allFinite()) {
    throw NumericError("predict_margined: non-finite logits or margins");
  }

  MarginedPrediction<Scalar> pred{Vector<Scalar>(c), Vector<Scalar>(c), logit_vec, margins,
                                  Matrix<Scalar>::Zero(c, c)};
  for (Index k = 0; k < c; ++k) {
    const Scalar own = logit_vec[k] - margins[k];
    Scalar shift = own;
    for (Index t = 0; t < c; ++t) {
      if (t != k) shift = std::max(shift, logit_vec[t]);
    }
    Scalar denom = std::exp(own - shift);
    for (Index t = 0; t < c; ++t) {
      if (t != k) denom += std::exp(logit_vec[t] - shift);
    }
    pred.log_components[k] = own - shift - std::log(denom);
    pred.components[k] = std::exp(pred.log_components[k]);
    for (Index t = 0; t < c; ++t) {
      if (t != k) pred.cross(k, t) = std::exp(logit_vec[t] - shift) / denom;
    }
  }
  return pred;
}

template <typename Scalar>
struct MarginedLoss {
  Scalar loss{};
  Vector<Scalar> d_logits;
  Vector<Scalar> d_margins;
};

// -sum_k y_k log p_k for one sample, with exact gradients:
//   dL/dm_k = y_k (1 - p_k)
//   dL/ds_t = -y_t (1 - p_t) + sum_{k != t} y_k cross(k, t)
template <typename Scalar>
MarginedLoss<Scalar> pml_loss(const LabelDistribution<Scalar>& target,
                              const MarginedPrediction<Scalar>& pred) {
  const Index c = pred.classes();
  if (target.classes() != c) throw ShapeError(shape_message("pml target", c, target.classes()));
  const Scalar log_floor = std::log(static_cast<Scalar>(kLogFloor));

  MarginedLoss<Scalar> out{Scalar(0), Vector<Scalar>::Zero(c), Vector<Scalar>::Zero(c)};
  for (Index k = 0; k < c; ++k) {
    const Scalar yk = target.probs[k];
    if (yk == Scalar(0)) continue;
    out.loss -= yk * std::max(pred.log_components[k], log_floor);
    const Scalar miss = yk * (Scalar(1) - pred.components[k]);
    out.d_margins[k] = miss;
    out.d_logits[k] -= miss;
    for (Index t = 0; t < c; ++t) {
      if (t != k) out.d_logits[t] += yk * pred.cross(k, t);
    }
  }
  return out;
}

template <typename Scalar>
struct BatchLoss {
  Scalar loss{};
  std::vector<MarginedLoss<Scalar>> samples;  // gradients already scaled by 1/n
};

// Batch mean of pml_loss, reduced in index order.
template <typename Scalar>
BatchLoss<Scalar> pml_loss_mean(std::span<const LabelDistribution<Scalar>> targets,
                                std::span<const MarginedPrediction<Scalar>> preds) {
  if (targets.size() != preds.size() || targets.empty()) {
    throw ShapeError("pml_loss_mean: batch sizes differ or batch is empty");
  }
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(targets.size());
  BatchLoss<Scalar> out;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    MarginedLoss<Scalar> one = pml_loss(targets[i], preds[i]);
    out.loss += one.loss * inv_n;
    one.loss *= inv_n;
    one.d_logits *= inv_n;
    one.d_margins *= inv_n;
    out.samples.push_back(std::move(one));
  }
  return out;
}

}  // namespace pml
