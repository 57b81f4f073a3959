#include "mmner/msb.hpp"

#include <algorithm>
#include <cmath>

#include "mmner/error.hpp"
#include "mmner/tagscheme.hpp"

namespace mmner {

MsbConfig MsbConfig::tiny() {
  MsbConfig c;
  c.hidden = 128;
  c.heads = 2;
  c.layers = 2;
  return c;
}

MsbConfig MsbConfig::small() {
  MsbConfig c;
  c.hidden = 512;
  c.heads = 8;
  c.layers = 4;
  return c;
}

void MsbConfig::validate() const {
  if (hidden < 1 || heads < 1 || layers < 1 || vocab_size < 1 || max_positions < 1) {
    throw ShapeError("msb config: all dimensions must be positive");
  }
  if (hidden % heads != 0) {
    throw ShapeError("msb config: hidden " + std::to_string(hidden) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
}

AttentionResult scaled_dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                             std::span<const int> key_mask) {
  const Shape& sq = q.shape();
  const Shape& sk = k.shape();
  const Shape& sv = v.shape();
  if (sq.size() != 2 || sk.size() != 2 || sv.size() != 2 || sq[1] != sk[1] || sk[0] != sv[0]) {
    throw ShapeError("attention: incompatible shapes " + shape_str(sq) + ", " + shape_str(sk) +
                     ", " + shape_str(sv));
  }
  if (!key_mask.empty() && static_cast<int64_t>(key_mask.size()) != sk[0]) {
    throw ShapeError("attention: mask length " + std::to_string(key_mask.size()) +
                     " does not cover " + std::to_string(sk[0]) + " keys");
  }
  Tensor scores = mul_scalar(matmul(q, transpose(k)),
                             1.0 / std::sqrt(static_cast<double>(sq[1])));
  if (!key_mask.empty()) {
    std::vector<double> bias(static_cast<size_t>(sq[0] * sk[0]), 0.0);
    for (int64_t r = 0; r < sq[0]; ++r) {
      for (int64_t c = 0; c < sk[0]; ++c) {
        if (key_mask[static_cast<size_t>(c)] == 0) {
          bias[static_cast<size_t>(r * sk[0] + c)] = -1e9;
        }
      }
    }
    scores = add(scores, Tensor::leaf({sq[0], sk[0]}, std::move(bias)));
  }
  AttentionResult result;
  result.weights = softmax(scores, 1);
  result.output = matmul(result.weights, v);
  return result;
}

std::vector<NamedParam> EncoderLayerParams::named(const std::string& prefix) const {
  return {{prefix + ".attn.w_q", w_q},       {prefix + ".attn.b_q", b_q},
          {prefix + ".attn.w_k", w_k},       {prefix + ".attn.b_k", b_k},
          {prefix + ".attn.w_v", w_v},       {prefix + ".attn.b_v", b_v},
          {prefix + ".attn.w_o", w_o},       {prefix + ".attn.b_o", b_o},
          {prefix + ".ln1.gamma", ln1_gamma}, {prefix + ".ln1.beta", ln1_beta},
          {prefix + ".ffn.w1", w_ff1},       {prefix + ".ffn.b1", b_ff1},
          {prefix + ".ffn.w2", w_ff2},       {prefix + ".ffn.b2", b_ff2},
          {prefix + ".ln2.gamma", ln2_gamma}, {prefix + ".ln2.beta", ln2_beta}};
}

MsbModel::MsbModel(MsbConfig config, std::shared_ptr<const SubwordVocab> vocab, uint64_t seed)
    : config_(config), vocab_(std::move(vocab)) {
  config_.validate();
  if (!vocab_) {
    throw ConfigError("msb: subword vocabulary is required");
  }
  if (static_cast<int64_t>(vocab_->size()) != config_.vocab_size) {
    // the vocabulary file defines the table size
    config_.vocab_size = static_cast<int64_t>(vocab_->size());
  }
  Rng rng(seed);
  const int64_t h = config_.hidden;
  auto emb = [&](int64_t rows) { return Tensor::uniform({rows, h}, -0.05, 0.05, rng, true); };
  tok_emb_ = emb(config_.vocab_size);
  seg_emb_ = emb(2);
  pos_emb_ = emb(config_.max_positions);
  emb_ln_gamma_ = Tensor::full({1, h}, 1.0, true);
  emb_ln_beta_ = Tensor::zeros({1, h}, true);
  layers_.resize(static_cast<size_t>(config_.layers));
  for (auto& layer : layers_) {
    layer.w_q = glorot_uniform({h, h}, h, h, rng);
    layer.b_q = Tensor::zeros({1, h}, true);
    layer.w_k = glorot_uniform({h, h}, h, h, rng);
    layer.b_k = Tensor::zeros({1, h}, true);
    layer.w_v = glorot_uniform({h, h}, h, h, rng);
    layer.b_v = Tensor::zeros({1, h}, true);
    layer.w_o = glorot_uniform({h, h}, h, h, rng);
    layer.b_o = Tensor::zeros({1, h}, true);
    layer.ln1_gamma = Tensor::full({1, h}, 1.0, true);
    layer.ln1_beta = Tensor::zeros({1, h}, true);
    layer.w_ff1 = glorot_uniform({h, config_.ffn_dim()}, h, config_.ffn_dim(), rng);
    layer.b_ff1 = Tensor::zeros({1, config_.ffn_dim()}, true);
    layer.w_ff2 = glorot_uniform({config_.ffn_dim(), h}, config_.ffn_dim(), h, rng);
    layer.b_ff2 = Tensor::zeros({1, h}, true);
    layer.ln2_gamma = Tensor::full({1, h}, 1.0, true);
    layer.ln2_beta = Tensor::zeros({1, h}, true);
  }
  head_w_ = glorot_uniform({h, TagScheme::kNumTags}, h, TagScheme::kNumTags, rng);
  head_b_ = Tensor::zeros({1, TagScheme::kNumTags}, true);
  if (config_.use_crf) {
    crf_ = CrfParams::zeros(TagScheme::kNumTags);
  }
}

Tensor MsbModel::encode(const std::vector<int>& ids, const std::vector<int>& segments,
                        const std::vector<int>& attention_mask) {
  const int64_t len = static_cast<int64_t>(ids.size());
  if (len < 1) {
    throw ContractError("msb encode: empty input");
  }
  if (len > config_.max_positions) {
    throw ContractError("msb encode: " + std::to_string(len) + " positions exceed max " +
                        std::to_string(config_.max_positions));
  }
  if (segments.size() != ids.size() || attention_mask.size() != ids.size()) {
    throw ContractError("msb encode: ids, segments and mask lengths differ");
  }
  std::vector<int64_t> tok_ids(len), seg_ids(len), pos_ids(len);
  for (int64_t i = 0; i < len; ++i) {
    const int id = ids[static_cast<size_t>(i)];
    if (id < 0 || id >= config_.vocab_size) {
      throw ContractError("msb encode: token id " + std::to_string(id) + " out of vocabulary");
    }
    tok_ids[static_cast<size_t>(i)] = id;
    seg_ids[static_cast<size_t>(i)] = segments[static_cast<size_t>(i)] == 0 ? 0 : 1;
    pos_ids[static_cast<size_t>(i)] = i;
  }
  Tensor x = add(add(gather_rows(tok_emb_, tok_ids), gather_rows(seg_emb_, seg_ids)),
                 gather_rows(pos_emb_, pos_ids));
  x = layer_norm(x, emb_ln_gamma_, emb_ln_beta_);

  const int64_t head_dim = config_.hidden / config_.heads;
  last_attention_.clear();
  for (const auto& layer : layers_) {
    const Tensor q = add_rowwise(matmul(x, layer.w_q), layer.b_q);
    const Tensor k = add_rowwise(matmul(x, layer.w_k), layer.b_k);
    const Tensor v = add_rowwise(matmul(x, layer.w_v), layer.b_v);
    std::vector<Tensor> heads;
    heads.reserve(static_cast<size_t>(config_.heads));
    for (int64_t head = 0; head < config_.heads; ++head) {
      const int64_t off = head * head_dim;
      AttentionResult att = scaled_dot_product_attention(
          slice_cols(q, off, head_dim), slice_cols(k, off, head_dim),
          slice_cols(v, off, head_dim), attention_mask);
      last_attention_.push_back(att.weights);
      heads.push_back(att.output);
    }
    const Tensor merged = add_rowwise(
        matmul(concat_cols(std::span<const Tensor>(heads)), layer.w_o), layer.b_o);
    x = layer_norm(add(x, merged), layer.ln1_gamma, layer.ln1_beta);
    const Tensor ff = add_rowwise(
        matmul(relu(add_rowwise(matmul(x, layer.w_ff1), layer.b_ff1)), layer.w_ff2),
        layer.b_ff2);
    x = layer_norm(add(x, ff), layer.ln2_gamma, layer.ln2_beta);
  }
  return x;
}

ModelInput MsbModel::prepare(const Example& example) const {
  std::vector<std::string> labels;
  for (const auto& w : example.image_words) {
    labels.push_back(w.label);
  }
  return assemble_input(example.tokens, labels, *vocab_, config_.max_positions);
}

Tensor MsbModel::word_emissions(const Example& example) {
  const ModelInput input = prepare(example);
  const Tensor hidden = encode(input.ids, input.segments, input.attention_mask);
  std::vector<int64_t> rows;
  rows.reserve(input.first_subword.size());
  for (int pos : input.first_subword) {
    if (pos >= 0) {
      rows.push_back(pos);
    }
  }
  if (rows.empty()) {
    throw ContractError("msb: example '" + example.id + "' has no taggable words");
  }
  return add_rowwise(matmul(gather_rows(hidden, rows), head_w_), head_b_);
}

Tensor MsbModel::loss(const Example& example) {
  const ModelInput input = prepare(example);
  std::vector<int> tags;
  for (size_t w = 0; w < input.first_subword.size(); ++w) {
    if (input.first_subword[w] < 0) {
      continue;  // truncated away
    }
    const int idx = TagScheme::index_of(example.tags[w]);
    if (idx < 0) {
      throw ContractError("msb loss: unknown tag '" + example.tags[w] + "'");
    }
    tags.push_back(idx);
  }
  const Tensor emissions = word_emissions(example);
  if (config_.use_crf) {
    return mul_scalar(crf_log_likelihood(emissions, tags, crf_), -1.0);
  }
  // mean token-level cross entropy
  Tensor total;
  const Tensor log_probs = log_softmax(emissions, 1);
  for (size_t t = 0; t < tags.size(); ++t) {
    const Tensor picked = slice_cols(slice_rows(log_probs, static_cast<int64_t>(t), 1),
                                     tags[t], 1);
    total = total.defined() ? add(total, picked) : picked;
  }
  return mul_scalar(reshape(total, {1}), -1.0 / static_cast<double>(tags.size()));
}

std::vector<int> MsbModel::predict(const Example& example, bool mask_illegal) {
  const ModelInput input = prepare(example);
  const Tensor emissions = word_emissions(example);
  std::vector<int> decoded;
  if (config_.use_crf) {
    decoded = viterbi_decode(emissions, crf_, mask_illegal).first;
  } else {
    const int64_t k = emissions.shape()[1];
    for (int64_t r = 0; r < emissions.shape()[0]; ++r) {
      int best = 0;
      for (int64_t j = 1; j < k; ++j) {
        if (emissions.at(r, j) > emissions.at(r, best)) {
          best = static_cast<int>(j);
        }
      }
      decoded.push_back(best);
    }
  }
  // map back onto words; truncated words fall back to O
  std::vector<int> tags(example.tokens.size(), 0);
  size_t next = 0;
  for (size_t w = 0; w < input.first_subword.size(); ++w) {
    if (input.first_subword[w] >= 0 && next < decoded.size()) {
      tags[w] = decoded[next++];
    }
  }
  return tags;
}

std::vector<NamedParam> MsbModel::parameters() {
  std::vector<NamedParam> params;
  params.push_back({"emb.token", tok_emb_});
  params.push_back({"emb.segment", seg_emb_});
  params.push_back({"emb.position", pos_emb_});
  params.push_back({"emb.ln.gamma", emb_ln_gamma_});
  params.push_back({"emb.ln.beta", emb_ln_beta_});
  for (size_t i = 0; i < layers_.size(); ++i) {
    for (auto& p : layers_[i].named("layer" + std::to_string(i))) {
      params.push_back(p);
    }
  }
  params.push_back({"head.weight", head_w_});
  params.push_back({"head.bias", head_b_});
  if (config_.use_crf) {
    for (auto& p : crf_.named("crf")) {
      params.push_back(p);
    }
  }
  return params;
}

}  // namespace mmner
