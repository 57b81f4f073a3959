#include "mmner/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmner/error.hpp"
#include "mmner/tagscheme.hpp"

namespace mmner {

namespace {

using detail::Node;

constexpr double kIllegalPenalty = -1e4;

double logsumexp(std::span<const double> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    mx = std::max(mx, x);
  }
  if (!std::isfinite(mx)) {
    return mx;
  }
  double acc = 0.0;
  for (double x : xs) {
    acc += std::exp(x - mx);
  }
  return mx + std::log(acc);
}

// Forward/backward log-potential tables; alpha[t][j] includes the emission at
// t, beta[t][j] excludes it.
struct ForwardBackward {
  std::vector<double> alpha;
  std::vector<double> beta;
  double log_z = 0.0;
};

ForwardBackward run_forward_backward(const std::vector<double>& em,
                                     const std::vector<double>& trans,
                                     const std::vector<double>& start,
                                     const std::vector<double>& stop, int64_t n, int64_t k) {
  ForwardBackward fb;
  fb.alpha.assign(static_cast<size_t>(n * k), 0.0);
  fb.beta.assign(static_cast<size_t>(n * k), 0.0);
  std::vector<double> scratch(static_cast<size_t>(k));
  for (int64_t j = 0; j < k; ++j) {
    fb.alpha[static_cast<size_t>(j)] = start[static_cast<size_t>(j)] + em[static_cast<size_t>(j)];
  }
  for (int64_t t = 1; t < n; ++t) {
    for (int64_t j = 0; j < k; ++j) {
      for (int64_t i = 0; i < k; ++i) {
        scratch[static_cast<size_t>(i)] = fb.alpha[static_cast<size_t>((t - 1) * k + i)] +
                                          trans[static_cast<size_t>(i * k + j)];
      }
      fb.alpha[static_cast<size_t>(t * k + j)] =
          logsumexp(scratch) + em[static_cast<size_t>(t * k + j)];
    }
  }
  for (int64_t j = 0; j < k; ++j) {
    fb.beta[static_cast<size_t>((n - 1) * k + j)] = stop[static_cast<size_t>(j)];
  }
  for (int64_t t = n - 2; t >= 0; --t) {
    for (int64_t i = 0; i < k; ++i) {
      for (int64_t j = 0; j < k; ++j) {
        scratch[static_cast<size_t>(j)] = trans[static_cast<size_t>(i * k + j)] +
                                          em[static_cast<size_t>((t + 1) * k + j)] +
                                          fb.beta[static_cast<size_t>((t + 1) * k + j)];
      }
      fb.beta[static_cast<size_t>(t * k + i)] = logsumexp(scratch);
    }
  }
  for (int64_t j = 0; j < k; ++j) {
    scratch[static_cast<size_t>(j)] = fb.alpha[static_cast<size_t>((n - 1) * k + j)] +
                                      stop[static_cast<size_t>(j)];
  }
  fb.log_z = logsumexp(scratch);
  return fb;
}

void check_inputs(const Tensor& emissions, const CrfParams& params) {
  const Shape& se = emissions.shape();
  if (se.size() != 2 || se[0] < 1) {
    throw ShapeError("crf: emissions must be [n x K], got " + shape_str(se));
  }
  const int64_t k = se[1];
  if (params.transitions.shape() != Shape{k, k} || params.start.shape() != Shape{1, k} ||
      params.stop.shape() != Shape{1, k}) {
    throw ShapeError("crf: parameter shapes do not match " + std::to_string(k) + " tags");
  }
}

}  // namespace

CrfParams CrfParams::zeros(int64_t num_tags) {
  CrfParams p;
  p.transitions = Tensor::zeros({num_tags, num_tags}, true);
  p.start = Tensor::zeros({1, num_tags}, true);
  p.stop = Tensor::zeros({1, num_tags}, true);
  return p;
}

std::vector<NamedParam> CrfParams::named(const std::string& prefix) const {
  return {{prefix + ".transitions", transitions},
          {prefix + ".start", start},
          {prefix + ".stop", stop}};
}

Tensor crf_log_likelihood(const Tensor& emissions, const std::vector<int>& tags,
                          const CrfParams& params) {
  check_inputs(emissions, params);
  const int64_t n = emissions.shape()[0];
  const int64_t k = emissions.shape()[1];
  if (static_cast<int64_t>(tags.size()) != n) {
    throw ContractError("crf_log_likelihood: " + std::to_string(tags.size()) + " tags for " +
                        std::to_string(n) + " emission rows");
  }
  for (int t : tags) {
    if (t < 0 || t >= k) {
      throw ContractError("crf_log_likelihood: tag index " + std::to_string(t) +
                          " out of range [0, " + std::to_string(k) + ")");
    }
  }

  const auto& em = emissions.node()->value;
  const auto& trans = params.transitions.node()->value;
  const auto& start = params.start.node()->value;
  const auto& stop = params.stop.node()->value;

  const ForwardBackward fb = run_forward_backward(em, trans, start, stop, n, k);
  double path_score = start[static_cast<size_t>(tags[0])] +
                      em[static_cast<size_t>(tags[0])] +
                      stop[static_cast<size_t>(tags[static_cast<size_t>(n - 1)])];
  for (int64_t t = 1; t < n; ++t) {
    path_score += trans[static_cast<size_t>(tags[static_cast<size_t>(t - 1)] * k +
                                            tags[static_cast<size_t>(t)])] +
                  em[static_cast<size_t>(t * k + tags[static_cast<size_t>(t)])];
  }

  auto node = std::make_shared<Node>();
  node->shape = {1};
  node->value = {path_score - fb.log_z};
  node->parents = {emissions.node(), params.transitions.node(), params.start.node(),
                   params.stop.node()};
  for (const auto& p : node->parents) {
    node->requires_grad = node->requires_grad || p->requires_grad;
  }
  if (node->requires_grad) {
    node->grad = {0.0};
    node->backward = [n, k, tags, fb](Node& self) {
      Node& p_em = *self.parents[0];
      Node& p_trans = *self.parents[1];
      Node& p_start = *self.parents[2];
      Node& p_stop = *self.parents[3];
      const double g = self.grad[0];
      const auto& em = p_em.value;
      const auto& trans = p_trans.value;
      // d log p / d emissions[t][j] = 1{tags[t]==j} - P(y_t = j)
      for (int64_t t = 0; t < n; ++t) {
        for (int64_t j = 0; j < k; ++j) {
          const size_t idx = static_cast<size_t>(t * k + j);
          const double marginal = std::exp(fb.alpha[idx] + fb.beta[idx] - fb.log_z);
          const double indicator = tags[static_cast<size_t>(t)] == j ? 1.0 : 0.0;
          if (p_em.requires_grad) {
            p_em.grad[idx] += g * (indicator - marginal);
          }
          if (p_start.requires_grad && t == 0) {
            p_start.grad[static_cast<size_t>(j)] += g * (indicator - marginal);
          }
          if (p_stop.requires_grad && t == n - 1) {
            p_stop.grad[static_cast<size_t>(j)] += g * (indicator - marginal);
          }
        }
      }
      if (p_trans.requires_grad) {
        for (int64_t t = 0; t + 1 < n; ++t) {
          for (int64_t i = 0; i < k; ++i) {
            for (int64_t j = 0; j < k; ++j) {
              const double pair = std::exp(fb.alpha[static_cast<size_t>(t * k + i)] +
                                           trans[static_cast<size_t>(i * k + j)] +
                                           em[static_cast<size_t>((t + 1) * k + j)] +
                                           fb.beta[static_cast<size_t>((t + 1) * k + j)] -
                                           fb.log_z);
              const double indicator = (tags[static_cast<size_t>(t)] == i &&
                                        tags[static_cast<size_t>(t + 1)] == j)
                                           ? 1.0
                                           : 0.0;
              p_trans.grad[static_cast<size_t>(i * k + j)] += g * (indicator - pair);
            }
          }
        }
      }
    };
  }
  return Tensor(node);
}

double crf_log_partition(const Tensor& emissions, const CrfParams& params) {
  check_inputs(emissions, params);
  const int64_t n = emissions.shape()[0];
  const int64_t k = emissions.shape()[1];
  return run_forward_backward(emissions.node()->value, params.transitions.node()->value,
                              params.start.node()->value, params.stop.node()->value, n, k)
      .log_z;
}

std::pair<std::vector<int>, double> viterbi_decode(const Tensor& emissions,
                                                   const CrfParams& params, bool mask_illegal) {
  check_inputs(emissions, params);
  const int64_t n = emissions.shape()[0];
  const int64_t k = emissions.shape()[1];
  const auto& em = emissions.node()->value;
  std::vector<double> trans(params.transitions.data().begin(), params.transitions.data().end());
  std::vector<double> start(params.start.data().begin(), params.start.data().end());
  if (mask_illegal) {
    if (k != TagScheme::kNumTags) {
      throw ContractError("viterbi_decode: BIO2 masking requires the 9-tag scheme");
    }
    for (int64_t i = 0; i < k; ++i) {
      for (int64_t j = 0; j < k; ++j) {
        if (!TagScheme::transition_legal(static_cast<int>(i), static_cast<int>(j))) {
          trans[static_cast<size_t>(i * k + j)] += kIllegalPenalty;
        }
      }
    }
    for (int64_t j = 0; j < k; ++j) {
      if (!TagScheme::transition_legal(-1, static_cast<int>(j))) {
        start[static_cast<size_t>(j)] += kIllegalPenalty;
      }
    }
  }

  std::vector<double> score(static_cast<size_t>(k));
  std::vector<double> next(static_cast<size_t>(k));
  std::vector<int> history(static_cast<size_t>((n > 1 ? n - 1 : 0) * k));
  for (int64_t j = 0; j < k; ++j) {
    score[static_cast<size_t>(j)] = start[static_cast<size_t>(j)] + em[static_cast<size_t>(j)];
  }
  for (int64_t t = 1; t < n; ++t) {
    for (int64_t j = 0; j < k; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int best_prev = 0;
      for (int64_t i = 0; i < k; ++i) {
        const double s = score[static_cast<size_t>(i)] + trans[static_cast<size_t>(i * k + j)];
        if (s > best) {  // strict: first (lowest) index wins ties
          best = s;
          best_prev = static_cast<int>(i);
        }
      }
      next[static_cast<size_t>(j)] = best + em[static_cast<size_t>(t * k + j)];
      history[static_cast<size_t>((t - 1) * k + j)] = best_prev;
    }
    std::swap(score, next);
  }
  const auto& stop = params.stop.node()->value;
  double best = -std::numeric_limits<double>::infinity();
  int best_last = 0;
  for (int64_t j = 0; j < k; ++j) {
    const double s = score[static_cast<size_t>(j)] + stop[static_cast<size_t>(j)];
    if (s > best) {
      best = s;
      best_last = static_cast<int>(j);
    }
  }
  std::vector<int> path(static_cast<size_t>(n));
  path[static_cast<size_t>(n - 1)] = best_last;
  for (int64_t t = n - 2; t >= 0; --t) {
    path[static_cast<size_t>(t)] =
        history[static_cast<size_t>(t * k + path[static_cast<size_t>(t + 1)])];
  }
  return {std::move(path), best};
}

}  // namespace mmner
