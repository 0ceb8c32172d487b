#pragma once

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pml/errors.hpp"

namespace pml {

enum class OptimizerKind { Sgd, Adam };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;  // sgd only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 term folded into the gradient

  void validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning_rate must be finite and nonnegative");
    }
    for (double b : {momentum, beta1, beta2}) {
      if (!(b >= 0.0 && b < 1.0)) throw ConfigError("momentum/beta parameters must lie in [0, 1)");
    }
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be nonnegative");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  }
};

// One contiguous block of trainable values and its gradient.
template <typename Scalar>
struct ParamSlot {
  std::span<Scalar> value;
  std::span<const Scalar> grad;
};

// Stateful first-order optimizer. Slots must be presented in the same order
// and with the same sizes on every step.
template <typename Scalar>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

  const OptimizerConfig& config() const { return config_; }
  long steps() const { return step_; }

  void step(std::span<const ParamSlot<Scalar>> slots) {
    if (first_.empty()) {
      for (const auto& slot : slots) {
        first_.emplace_back(slot.value.size(), Scalar(0));
        second_.emplace_back(slot.value.size(), Scalar(0));
      }
    }
    if (first_.size() != slots.size()) throw StateError("optimizer slot layout changed");
    ++step_;
    const Scalar lr = static_cast<Scalar>(config_.learning_rate);
    const Scalar wd = static_cast<Scalar>(config_.weight_decay);
    const Scalar b1 = static_cast<Scalar>(config_.beta1);
    const Scalar b2 = static_cast<Scalar>(config_.beta2);
    const Scalar correction1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(step_));
    const Scalar correction2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(step_));

    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto& slot = slots[s];
      if (slot.value.size() != first_[s].size() || slot.grad.size() != slot.value.size()) {
        throw StateError("optimizer slot " + std::to_string(s) + " changed size");
      }
      auto& m = first_[s];
      auto& v = second_[s];
      for (std::size_t i = 0; i < slot.value.size(); ++i) {
        const Scalar g = slot.grad[i] + wd * slot.value[i];
        if (config_.kind == OptimizerKind::Sgd) {
          m[i] = static_cast<Scalar>(config_.momentum) * m[i] + g;
          slot.value[i] -= lr * m[i];
        } else {
          m[i] = b1 * m[i] + (Scalar(1) - b1) * g;
          v[i] = b2 * v[i] + (Scalar(1) - b2) * g * g;
          const Scalar m_hat = m[i] / correction1;
          const Scalar v_hat = v[i] / correction2;
          slot.value[i] -= lr * m_hat / (std::sqrt(v_hat) + static_cast<Scalar>(config_.epsilon));
        }
      }
    }
  }

 private:
  OptimizerConfig config_;
  long step_ = 0;
  std::vector<std::vector<Scalar>> first_;
  std::vector<std::vector<Scalar>> second_;
};

}  // namespace pml
