#pragma once

#include <utility>
#include <vector>

#include "mmner/optim.hpp"
#include "mmner/tensor.hpp"

namespace mmner {

/// Linear-chain CRF parameters over the 9 BIO2 tags. transitions[prev][next]
/// plus learnable start/stop scores, indexed in TagScheme order.
struct CrfParams {
  Tensor transitions;  // [K x K]
  Tensor start;        // [1 x K]
  Tensor stop;         // [1 x K]

  static CrfParams zeros(int64_t num_tags);
  std::vector<NamedParam> named(const std::string& prefix) const;
  int64_t num_tags() const { return transitions.shape()[0]; }
};

/// log p(tags | emissions) = score(path) - logZ, exact via the forward
/// algorithm in log space. Differentiable w.r.t. emissions and parameters.
Tensor crf_log_likelihood(const Tensor& emissions, const std::vector<int>& tags,
                          const CrfParams& params);

/// The log partition function alone.
double crf_log_partition(const Tensor& emissions, const CrfParams& params);

/// Maximum-score path and its score. Ties break toward the lowest tag index.
/// mask_illegal adds -1e4 to BIO2-illegal transitions (and illegal start
/// tags) before decoding.
std::pair<std::vector<int>, double> viterbi_decode(const Tensor& emissions,
                                                   const CrfParams& params,
                                                   bool mask_illegal = false);

}  // namespace mmner
