#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mmner/tensor.hpp"

namespace mmner {

namespace gradcheck {

struct Options {
  double step = 1e-5;
  double tolerance = 1e-4;
  // 0 = every entry; otherwise this many entries sampled per tensor
  int64_t sample_entries = 0;
  uint64_t sample_seed = 0;
  // test hook: added to every analytic gradient before comparison
  double corruption = 0.0;
};

/// Central finite differences against the tape gradients of `leaves`.
/// loss_fn must rebuild the scalar loss from the current leaf values on
/// every call. Returns the worst relative error seen.
double finite_difference_error(const std::function<Tensor()>& loss_fn, std::span<Tensor> leaves,
                               const Options& options = {});

/// |a - b| / max(|a|, |b|, 0.01): relative for ordinary magnitudes,
/// absolute-with-floor near zero.
double relative_error(double a, double b);

}  // namespace gradcheck

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// The release-gate oracle suite: finite differences for every layer, CRF
/// brute force, metric brute force, tokenizer round-trip, softmax and top-k
/// recomputation, optimizer closed form. corrupt_gradient is a negative
/// control that must make the gradient checks fail.
std::vector<CheckResult> run_verification(bool corrupt_gradient = false);

std::string format_verification(const std::vector<CheckResult>& results);

}  // namespace mmner
