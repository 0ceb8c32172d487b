#pragma once

// Minimal dense network substrate: affine layers with pointwise activations,
// a recorded forward pass, and exact reverse-mode gradients. Samples are
// stored as columns, so a batch of n inputs is a (width x n) matrix.

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pml/errors.hpp"
#include "pml/types.hpp"

namespace pml {

enum class Activation { Relu, Tanh, Softplus, Identity };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "softplus") return Activation::Softplus;
  if (name == "identity") return Activation::Identity;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

// log(1 + e^z) without overflow for large |z|.
template <typename Scalar>
Scalar softplus(Scalar z) {
  using std::abs, std::exp, std::log1p, std::max;
  return max(z, Scalar(0)) + log1p(exp(-abs(z)));
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  using std::exp;
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-z));
  const Scalar e = exp(z);
  return e / (Scalar(1) + e);
}

template <typename Derived>
auto activate(const Eigen::MatrixBase<Derived>& z, Activation a) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out = z;
  switch (a) {
    case Activation::Relu: out = out.cwiseMax(Scalar(0)); break;
    case Activation::Tanh: out = out.array().tanh().matrix(); break;
    case Activation::Softplus: out = out.unaryExpr([](Scalar v) { return softplus(v); }); break;
    case Activation::Identity: break;
  }
  return out;
}

// d activation / d preactivation, evaluated elementwise.
template <typename Scalar>
Matrix<Scalar> activation_derivative(const Matrix<Scalar>& pre, const Matrix<Scalar>& post,
                                     Activation a) {
  switch (a) {
    case Activation::Relu:
      return pre.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
    case Activation::Tanh:
      return (Scalar(1) - post.array().square()).matrix();
    case Activation::Softplus:
      return pre.unaryExpr([](Scalar v) { return sigmoid(v); });
    case Activation::Identity:
      break;
  }
  return Matrix<Scalar>::Ones(pre.rows(), pre.cols());
}

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;    // out
  Activation activation = Activation::Identity;

  Index input_width() const { return weight.cols(); }
  Index output_width() const { return weight.rows(); }
};

// Values recorded by a forward pass and consumed by backward.
template <typename Scalar>
struct ForwardTape {
  std::vector<Matrix<Scalar>> inputs;  // input to layer k
  std::vector<Matrix<Scalar>> pre;     // preactivation of layer k
  std::vector<Matrix<Scalar>> post;    // activation output of layer k

  bool recorded() const { return !inputs.empty(); }
  void clear() {
    inputs.clear();
    pre.clear();
    post.clear();
  }
};

template <typename Scalar>
struct DenseNetGradient {
  std::vector<Matrix<Scalar>> weight;
  std::vector<Vector<Scalar>> bias;
  Matrix<Scalar> input;  // d loss / d input, one column per sample

  DenseNetGradient& operator+=(const DenseNetGradient& other) {
    if (weight.empty()) {
      *this = other;
      return *this;
    }
    for (std::size_t k = 0; k < weight.size(); ++k) {
      weight[k] += other.weight[k];
      bias[k] += other.bias[k];
    }
    return *this;
  }
};

template <typename Scalar>
class DenseNet {
 public:
  DenseNet() = default;

  explicit DenseNet(std::vector<DenseLayer<Scalar>> layers) : layers_(std::move(layers)) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& layer = layers_[k];
      if (layer.bias.size() != layer.weight.rows()) {
        throw ShapeError(shape_message("layer bias", layer.weight.rows(), layer.bias.size()));
      }
      if (k > 0 && layers_[k - 1].output_width() != layer.input_width()) {
        throw ShapeError("layer " + std::to_string(k) + " input width " +
                         std::to_string(layer.input_width()) + " does not chain with width " +
                         std::to_string(layers_[k - 1].output_width()));
      }
    }
  }

  // Glorot-uniform weights in [-sqrt(6/(fan_in+fan_out)), +sqrt(...)], zero bias.
  // widths has one more entry than activations.
  template <typename Rng>
  static DenseNet glorot(std::span<const Index> widths, std::span<const Activation> activations,
                         Rng& rng) {
    if (widths.size() != activations.size() + 1 || activations.empty()) {
      throw ShapeError("glorot: need one more width than activations");
    }
    std::vector<DenseLayer<Scalar>> layers;
    for (std::size_t k = 0; k < activations.size(); ++k) {
      const Index in = widths[k];
      const Index out = widths[k + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
      std::uniform_real_distribution<double> dist(-limit, limit);
      DenseLayer<Scalar> layer{Matrix<Scalar>(out, in), Vector<Scalar>::Zero(out),
                               activations[k]};
      for (Index c = 0; c < in; ++c) {
        for (Index r = 0; r < out; ++r) layer.weight(r, c) = static_cast<Scalar>(dist(rng));
      }
      layers.push_back(std::move(layer));
    }
    return DenseNet(std::move(layers));
  }

  Index input_width() const { return layers_.empty() ? 0 : layers_.front().input_width(); }
  Index output_width() const { return layers_.empty() ? 0 : layers_.back().output_width(); }
  std::size_t depth() const { return layers_.size(); }

  Index param_count() const {
    Index n = 0;
    for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
    return n;
  }

  const std::vector<DenseLayer<Scalar>>& layers() const { return layers_; }
  std::vector<DenseLayer<Scalar>>& layers() { return layers_; }

  // Pure evaluation; nothing is recorded.
  Matrix<Scalar> forward(const Matrix<Scalar>& input) const {
    check_input(input);
    Matrix<Scalar> a = input;
    for (const auto& layer : layers_) {
      Matrix<Scalar> z = layer.weight * a;
      z.colwise() += layer.bias;
      a = activate(z, layer.activation);
    }
    return a;
  }

  Vector<Scalar> forward(const Vector<Scalar>& input) const {
    return forward(Matrix<Scalar>(input)).col(0);
  }

  // Evaluation that records the intermediate values needed by backward.
  Matrix<Scalar> forward(const Matrix<Scalar>& input, ForwardTape<Scalar>& tape) const {
    check_input(input);
    tape.clear();
    Matrix<Scalar> a = input;
    for (const auto& layer : layers_) {
      tape.inputs.push_back(a);
      Matrix<Scalar> z = layer.weight * a;
      z.colwise() += layer.bias;
      a = activate(z, layer.activation);
      tape.pre.push_back(std::move(z));
      tape.post.push_back(a);
    }
    return a;
  }

  // Gradients summed over the batch columns of the recorded forward pass.
  DenseNetGradient<Scalar> backward(const ForwardTape<Scalar>& tape,
                                    const Matrix<Scalar>& upstream) const {
    if (!tape.recorded() || tape.inputs.size() != layers_.size()) {
      throw StateError("backward called without a recorded forward pass");
    }
    if (upstream.rows() != output_width() || upstream.cols() != tape.post.back().cols()) {
      throw ShapeError(shape_message("backward upstream", output_width(), upstream.rows()));
    }
    DenseNetGradient<Scalar> grad;
    grad.weight.resize(layers_.size());
    grad.bias.resize(layers_.size());
    Matrix<Scalar> delta = upstream;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const auto& layer = layers_[k];
      delta = delta.cwiseProduct(activation_derivative(tape.pre[k], tape.post[k], layer.activation));
      grad.weight[k] = delta * tape.inputs[k].transpose();
      grad.bias[k] = delta.rowwise().sum();
      delta = layer.weight.transpose() * delta;
    }
    grad.input = std::move(delta);
    return grad;
  }

  DenseNetGradient<Scalar> zero_gradient() const {
    DenseNetGradient<Scalar> grad;
    for (const auto& layer : layers_) {
      grad.weight.push_back(Matrix<Scalar>::Zero(layer.weight.rows(), layer.weight.cols()));
      grad.bias.push_back(Vector<Scalar>::Zero(layer.bias.size()));
    }
    return grad;
  }

 private:
  void check_input(const Matrix<Scalar>& input) const {
    if (layers_.empty()) throw StateError("forward on an empty network");
    if (input.rows() != input_width()) {
      throw ShapeError(shape_message("network input", input_width(), input.rows()));
    }
  }

  std::vector<DenseLayer<Scalar>> layers_;
};

// Linear classifier whose logit t is the dot-product similarity s(x, W_t).
template <typename Scalar>
struct ClassifierHead {
  Matrix<Scalar> weight;  // classes x feature_dim

  Index classes() const { return weight.rows(); }
  Index feature_dim() const { return weight.cols(); }

  template <typename Rng>
  static ClassifierHead glorot(Index classes, Index feature_dim, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(classes + feature_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    ClassifierHead head{Matrix<Scalar>(classes, feature_dim)};
    for (Index c = 0; c < feature_dim; ++c) {
      for (Index r = 0; r < classes; ++r) head.weight(r, c) = static_cast<Scalar>(dist(rng));
    }
    return head;
  }
};

template <typename Scalar>
Matrix<Scalar> logits(const ClassifierHead<Scalar>& head, const Matrix<Scalar>& features) {
  if (features.rows() != head.feature_dim()) {
    throw ShapeError(shape_message("classifier input", head.feature_dim(), features.rows()));
  }
  return head.weight * features;
}

template <typename Scalar>
Vector<Scalar> logits(const ClassifierHead<Scalar>& head, const Vector<Scalar>& x) {
  if (x.size() != head.feature_dim()) {
    throw ShapeError(shape_message("classifier input", head.feature_dim(), x.size()));
  }
  return head.weight * x;
}

template <typename Scalar>
struct HeadGradient {
  Matrix<Scalar> weight;
  Matrix<Scalar> input;
};

template <typename Scalar>
HeadGradient<Scalar> logits_backward(const ClassifierHead<Scalar>& head,
                                     const Matrix<Scalar>& features,
                                     const Matrix<Scalar>& upstream) {
  if (upstream.rows() != head.classes() || upstream.cols() != features.cols()) {
    throw ShapeError(shape_message("classifier upstream", head.classes(), upstream.rows()));
  }
  return {upstream * features.transpose(), head.weight.transpose() * upstream};
}

}  // namespace pml
