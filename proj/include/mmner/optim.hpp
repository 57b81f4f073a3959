#pragma once

#include <string>
#include <vector>

#include "mmner/tensor.hpp"

namespace mmner {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

struct OptimizerState {
  enum class Kind { sgd, adam };
  Kind kind = Kind::adam;
  double learning_rate = 8e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t step = 0;
  // First/second moment buffers, aligned with the bound parameter list.
  // Present iff kind == adam.
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// SGD or Adam (bias-corrected) over a fixed parameter list.
class Optimizer {
 public:
  Optimizer(std::vector<NamedParam> params, OptimizerState state);

  /// One update from the gradients currently held by the parameters.
  void step();
  void zero_grad();

  const OptimizerState& state() const { return state_; }
  const std::vector<NamedParam>& params() const { return params_; }

 private:
  std::vector<NamedParam> params_;
  OptimizerState state_;
};

}  // namespace mmner
