#pragma once

// Learned margins from class statistics.
//
// The ordinal network maps each statistics row [center, intra, inter] to a
// Gaussian (mu_j, sigma_j) anchored at class j:
//   mu_j    = j + tanh(out_0) * mu_range
//   sigma_j = softplus(out_1) + sigma_min
// which is sampled at every class index into a c x c table
//   table(j, k) = m_max * exp(-(k - mu_j)^2 / (2 sigma_j^2)).
// The variational network maps each residual row to one signed value,
// clamped to [-m_max, m_max]. Both networks share weights across classes.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "pml/class_stats.hpp"
#include "pml/errors.hpp"
#include "pml/nn.hpp"
#include "pml/types.hpp"

namespace pml {

struct MarginConfig {
  double m_max = 0.5;
  double mu_range = 2.0;
  double sigma_min = 0.5;

  void validate() const {
    if (!(m_max > 0.0) || !std::isfinite(m_max)) throw ConfigError("m_max must be positive");
    if (!(mu_range >= 0.0) || !std::isfinite(mu_range)) throw ConfigError("mu_range must be nonnegative");
    if (!(sigma_min > 0.0) || !std::isfinite(sigma_min)) throw ConfigError("sigma_min must be positive");
  }
};

struct MarginMix {
  double lambda = 1.0;
  double beta = 1.0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be finite and >= 0");
  }
};

template <typename Scalar>
struct OrdinalMargins {
  Matrix<Scalar> raw;         // classes x 2: (mu_j, sigma_j)
  Matrix<Scalar> table;       // classes x classes, entries in [0, m_max]
  Matrix<Scalar> net_output;  // 2 x classes, before tanh / softplus
  ForwardTape<Scalar> tape;

  Index classes() const { return raw.rows(); }
  Scalar mu(Index j) const { return raw(j, 0); }
  Scalar sigma(Index j) const { return raw(j, 1); }
};

template <typename Scalar>
struct VariationalMargin {
  Vector<Scalar> values;  // clamped
  Vector<Scalar> raw;     // network output before clamping
  ForwardTape<Scalar> tape;

  Index classes() const { return values.size(); }
};

namespace detail {

template <typename Scalar>
std::string dump_matrix(const Matrix<Scalar>& m) {
  std::ostringstream out;
  out.precision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
  return out.str();
}

}  // namespace detail

// Discretized Gaussian margin for one (mu, sigma) at index k.
template <typename Scalar>
Scalar ordinal_table_entry(Scalar mu, Scalar sigma, Index k, Scalar m_max) {
  const Scalar diff = static_cast<Scalar>(k) - mu;
  return m_max * std::exp(-diff * diff / (Scalar(2) * sigma * sigma));
}

template <typename Scalar>
OrdinalMargins<Scalar> ordinal_forward(const DenseNet<Scalar>& f_ordinal, const StatsSnapshot<Scalar>& stats,
                                       const MarginConfig& config) {
  if (f_ordinal.output_width() != 2) {
    throw ShapeError(shape_message("ordinal network output", 2, f_ordinal.output_width()));
  }
  const Index c = stats.classes();
  OrdinalMargins<Scalar> out;
  out.net_output = f_ordinal.forward(Matrix<Scalar>(stats.values.transpose()), out.tape);
  if (!out.net_output.allFinite()) {
    throw NumericError("ordinal margin network produced a non-finite output; statistics:\n" +
                       detail::dump_matrix(stats.values));
  }
  const Scalar mu_range = static_cast<Scalar>(config.mu_range);
  const Scalar sigma_min = static_cast<Scalar>(config.sigma_min);
  const Scalar m_max = static_cast<Scalar>(config.m_max);
  out.raw.resize(c, 2);
  out.table.resize(c, c);
  for (Index j = 0; j < c; ++j) {
    out.raw(j, 0) = static_cast<Scalar>(j) + std::tanh(out.net_output(0, j)) * mu_range;
    out.raw(j, 1) = softplus(out.net_output(1, j)) + sigma_min;
    for (Index k = 0; k < c; ++k) out.table(j, k) = ordinal_table_entry(out.raw(j, 0), out.raw(j, 1), k, m_max);
  }
  return out;
}

// d_table is dL/d table; returns gradients of the ordinal network.
template <typename Scalar>
DenseNetGradient<Scalar> ordinal_backward(const DenseNet<Scalar>& f_ordinal,
                                          const OrdinalMargins<Scalar>& margins,
                                          const Matrix<Scalar>& d_table, const MarginConfig& config) {
  const Index c = margins.classes();
  if (d_table.rows() != c || d_table.cols() != c) {
    throw ShapeError(shape_message("ordinal table gradient", c, d_table.rows()));
  }
  const Scalar mu_range = static_cast<Scalar>(config.mu_range);
  Matrix<Scalar> upstream(2, c);
  for (Index j = 0; j < c; ++j) {
    const Scalar mu = margins.mu(j);
    const Scalar sigma = margins.sigma(j);
    Scalar d_mu(0);
    Scalar d_sigma(0);
    for (Index k = 0; k < c; ++k) {
      const Scalar diff = static_cast<Scalar>(k) - mu;
      const Scalar g = d_table(j, k) * margins.table(j, k);
      d_mu += g * diff / (sigma * sigma);
      d_sigma += g * diff * diff / (sigma * sigma * sigma);
    }
    const Scalar th = std::tanh(margins.net_output(0, j));
    upstream(0, j) = d_mu * mu_range * (Scalar(1) - th * th);
    upstream(1, j) = d_sigma * sigmoid(margins.net_output(1, j));
  }
  return f_ordinal.backward(margins.tape, upstream);
}

template <typename Scalar>
VariationalMargin<Scalar> variational_forward(const DenseNet<Scalar>& f_variational,
                                              const Matrix<Scalar>& delta, const MarginConfig& config) {
  if (f_variational.output_width() != 1) {
    throw ShapeError(shape_message("variational network output", 1, f_variational.output_width()));
  }
  if (delta.cols() != f_variational.input_width()) {
    throw ShapeError(shape_message("statistics residual", f_variational.input_width(), delta.cols()));
  }
  VariationalMargin<Scalar> out;
  out.raw = f_variational.forward(Matrix<Scalar>(delta.transpose()), out.tape).row(0).transpose();
  if (!out.raw.allFinite()) {
    throw NumericError("variational margin network produced a non-finite output; residual:\n" +
                       detail::dump_matrix(delta));
  }
  const Scalar m_max = static_cast<Scalar>(config.m_max);
  out.values = out.raw.cwiseMax(-m_max).cwiseMin(m_max);
  return out;
}

// The clamp passes gradient only where the raw output lies inside the bounds.
template <typename Scalar>
DenseNetGradient<Scalar> variational_backward(const DenseNet<Scalar>& f_variational,
                                              const VariationalMargin<Scalar>& margin,
                                              const Vector<Scalar>& d_values, const MarginConfig& config) {
  if (d_values.size() != margin.classes()) {
    throw ShapeError(shape_message("variational gradient", margin.classes(), d_values.size()));
  }
  const Scalar m_max = static_cast<Scalar>(config.m_max);
  Matrix<Scalar> upstream(1, margin.classes());
  for (Index j = 0; j < margin.classes(); ++j) {
    const bool inside = margin.raw[j] >= -m_max && margin.raw[j] <= m_max;
    upstream(0, j) = inside ? d_values[j] : Scalar(0);
  }
  return f_variational.backward(margin.tape, upstream);
}

// m_p[k] = lambda * table(j, k) + beta * M_v[k] for a sample of true class j.
template <typename Scalar>
Vector<Scalar> combine(const OrdinalMargins<Scalar>& ordinal, const VariationalMargin<Scalar>& variational,
                       const MarginMix& mix, Index true_class) {
  if (true_class < 0 || true_class >= ordinal.classes()) {
    throw RangeError("combine: class " + std::to_string(true_class) + " out of range");
  }
  return static_cast<Scalar>(mix.lambda) * ordinal.table.row(true_class).transpose() +
         static_cast<Scalar>(mix.beta) * variational.values;
}

}  // namespace pml
