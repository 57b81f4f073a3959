#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmner/crf.hpp"
#include "mmner/layers.hpp"
#include "mmner/seqdata.hpp"
#include "mmner/tensor.hpp"
#include "mmner/wordpiece.hpp"

namespace mmner {

struct MsbConfig {
  int64_t hidden = 128;
  int64_t heads = 2;
  int64_t layers = 2;
  int64_t vocab_size = 30522;
  int64_t max_positions = 512;
  int64_t ffn = 0;  // 0 -> 4 * hidden
  bool use_crf = false;

  static MsbConfig tiny();
  static MsbConfig small();

  int64_t ffn_dim() const { return ffn > 0 ? ffn : 4 * hidden; }
  void validate() const;
};

struct AttentionResult {
  Tensor output;
  Tensor weights;  // [q x k] softmax rows
};

/// softmax(Q K^T / sqrt(d_k)) V with an additive -1e9 bias on masked key
/// positions. key_mask entries are 1 for real tokens; empty means all real.
AttentionResult scaled_dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                             std::span<const int> key_mask);

struct EncoderLayerParams {
  Tensor w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;
  Tensor ln1_gamma, ln1_beta;
  Tensor w_ff1, b_ff1, w_ff2, b_ff2;
  Tensor ln2_gamma, ln2_beta;

  std::vector<NamedParam> named(const std::string& prefix) const;
};

class MsbModel {
 public:
  MsbModel(MsbConfig config, std::shared_ptr<const SubwordVocab> vocab, uint64_t seed);

  /// Token+segment+position embeddings through the encoder stack.
  Tensor encode(const std::vector<int>& ids, const std::vector<int>& segments,
                const std::vector<int>& attention_mask);

  /// Per-head attention weight matrices of the last encode() call.
  const std::vector<Tensor>& last_attention_weights() const { return last_attention_; }

  ModelInput prepare(const Example& example) const;

  /// Emission rows for the first subword of each word, [n_words x 9].
  Tensor word_emissions(const Example& example);

  Tensor loss(const Example& example);
  std::vector<int> predict(const Example& example, bool mask_illegal = false);

  std::vector<NamedParam> parameters();
  const MsbConfig& config() const { return config_; }
  const SubwordVocab& vocab() const { return *vocab_; }
  CrfParams& crf_params() { return crf_; }

 private:
  MsbConfig config_;
  std::shared_ptr<const SubwordVocab> vocab_;

  Tensor tok_emb_, seg_emb_, pos_emb_;
  Tensor emb_ln_gamma_, emb_ln_beta_;
  std::vector<EncoderLayerParams> layers_;
  Tensor head_w_, head_b_;
  CrfParams crf_;

  std::vector<Tensor> last_attention_;
};

}  // namespace mmner
