#include "mmner/optim.hpp"

#include <cmath>

#include "mmner/error.hpp"

namespace mmner {

Optimizer::Optimizer(std::vector<NamedParam> params, OptimizerState state)
    : params_(std::move(params)), state_(std::move(state)) {
  for (const auto& p : params_) {
    if (!p.tensor.requires_grad()) {
      throw ContractError("optimizer: parameter '" + p.name + "' does not require grad");
    }
  }
  if (state_.kind == OptimizerState::Kind::adam) {
    state_.m.resize(params_.size());
    state_.v.resize(params_.size());
    for (size_t i = 0; i < params_.size(); ++i) {
      state_.m[i].assign(static_cast<size_t>(params_[i].tensor.numel()), 0.0);
      state_.v[i].assign(static_cast<size_t>(params_[i].tensor.numel()), 0.0);
    }
  } else {
    state_.m.clear();
    state_.v.clear();
  }
}

void Optimizer::step() {
  ++state_.step;
  const double lr = state_.learning_rate;
  if (state_.kind == OptimizerState::Kind::sgd) {
    for (auto& p : params_) {
      auto value = p.tensor.data();
      auto grad = p.tensor.grad();
      for (size_t i = 0; i < value.size(); ++i) {
        value[i] -= lr * grad[i];
      }
    }
    return;
  }
  const double bc1 = 1.0 - std::pow(state_.beta1, static_cast<double>(state_.step));
  const double bc2 = 1.0 - std::pow(state_.beta2, static_cast<double>(state_.step));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    auto value = params_[pi].tensor.data();
    auto grad = params_[pi].tensor.grad();
    auto& m = state_.m[pi];
    auto& v = state_.v[pi];
    for (size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = state_.beta1 * m[i] + (1.0 - state_.beta1) * g;
      v[i] = state_.beta2 * v[i] + (1.0 - state_.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= lr * m_hat / (std::sqrt(v_hat) + state_.eps);
    }
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) {
    p.tensor.zero_grad();
  }
}

}  // namespace mmner
