#pragma once

#include <utility>
#include <vector>

#include "mmner/optim.hpp"
#include "mmner/rng.hpp"
#include "mmner/tensor.hpp"

namespace mmner {

/// x for x > 0, epsilon * (sin x - cos x) for x <= 0.
Tensor sine_relu(const Tensor& x, double epsilon);

/// Magnitude-targeted dropout. The target_rate fraction of lowest-|x| units
/// (highest when `target_highest`) is dropped independently with probability
/// drop_rate; survivors are not rescaled. Identity when not training.
Tensor targeted_dropout(const Tensor& x, double drop_rate, double target_rate, bool training,
                        Rng& rng, bool target_highest = false);

/// x: [len x C] normalized per channel group over (len x C/G) entries,
/// then scaled by gamma/beta ([1 x C] each).
Tensor group_norm(const Tensor& x, int64_t groups, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

/// Per-row normalization over the feature axis of [m x n].
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

struct LstmParams {
  Tensor W_f, W_i, W_o, W_c;  // [input x H]
  Tensor U_f, U_i, U_o, U_c;  // [H x H]
  Tensor b_f, b_i, b_o, b_c;  // [1 x H]
  int64_t hidden = 0;

  std::vector<NamedParam> named(const std::string& prefix) const;
};

LstmParams make_lstm(int64_t input, int64_t hidden, Rng& rng);

/// One cell update; x_t is [1 x input], h/c are [1 x H].
std::pair<Tensor, Tensor> lstm_step(const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev,
                                    const LstmParams& params);

/// Hidden states for every position, processed left-to-right (or reversed);
/// returned in original position order either way.
std::vector<Tensor> lstm_run(std::span<const Tensor> xs, const LstmParams& params,
                             bool reverse = false);

/// Per-position [h_fwd | h_bwd], output width 2H.
std::vector<Tensor> bilstm(std::span<const Tensor> xs, const LstmParams& fwd,
                           const LstmParams& bwd);

struct AttentionParams {
  Tensor W_w;  // [d x d]
  Tensor b_w;  // [1 x d]

  std::vector<NamedParam> named(const std::string& prefix) const;
};

AttentionParams make_attention(int64_t dim, Rng& rng);

/// Additive attention over same-width modality vectors:
/// u_i = tanh(h_i W + b), alpha = softmax_i(h_i . u_i), result = sum alpha_i h_i.
Tensor modality_attention(std::span<const Tensor> modalities, const AttentionParams& params);

/// The attention weights alone (for normalization checks).
Tensor modality_attention_weights(std::span<const Tensor> modalities,
                                  const AttentionParams& params);

/// Uniform init with conventional fan-based scale.
Tensor glorot_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng);

}  // namespace mmner
