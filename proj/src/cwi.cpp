#include "mmner/cwi.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "mmner/error.hpp"
#include "mmner/tagscheme.hpp"

namespace mmner {

int64_t CwiConfig::pooled_len(int stage) const {
  int64_t len = max_chars;
  for (int s = 0; s < stage; ++s) {
    len = (len + pool - 1) / pool;
  }
  return len;
}

int64_t CwiConfig::fusion_input_dim() const {
  if (use_attention) {
    return attention_dim;
  }
  return char_feature_width() + 2 * word_lstm + image_lstm;
}

void CwiConfig::validate() const {
  if (conv.size() != 6) {
    throw ShapeError("cwi config: expected 6 conv stages, got " + std::to_string(conv.size()));
  }
  for (const auto& spec : conv) {
    if (spec.kernel < 1 || spec.channels < 1) {
      throw ShapeError("cwi config: conv kernel sizes and channel counts must be positive");
    }
  }
  // Length-axis skip concatenations need matching channel counts.
  if (conv[2].channels != conv[3].channels) {
    throw ShapeError("cwi config: skip (pool3, conv4) joins " + std::to_string(conv[2].channels) +
                     " and " + std::to_string(conv[3].channels) + " channels");
  }
  if (conv[1].channels != conv[4].channels) {
    throw ShapeError("cwi config: skip (pool2, conv5) joins " + std::to_string(conv[1].channels) +
                     " and " + std::to_string(conv[4].channels) + " channels");
  }
  if (conv[0].channels != conv[5].channels) {
    throw ShapeError("cwi config: skip (pool1, conv6) joins " + std::to_string(conv[0].channels) +
                     " and " + std::to_string(conv[5].channels) + " channels");
  }
  if (char_feature_channels() % groups != 0) {
    throw ShapeError("cwi config: " + std::to_string(char_feature_channels()) +
                     " char feature channels not divisible into " + std::to_string(groups) +
                     " groups");
  }
  if (max_words < 1 || max_chars < 1 || pool < 1) {
    throw ShapeError("cwi config: max_words, max_chars and pool must be positive");
  }
  if (use_attention && attention_dim < 1) {
    throw ShapeError("cwi config: attention_dim must be positive");
  }
}

std::vector<int64_t> CharVocab::encode(const std::string& word, int64_t max_chars) {
  std::vector<int64_t> ids;
  ids.reserve(static_cast<size_t>(max_chars));
  size_t i = 0;
  while (i < word.size() && static_cast<int64_t>(ids.size()) < max_chars) {
    const unsigned char c = static_cast<unsigned char>(word[i]);
    size_t advance = 1;
    if (c < 0x80) {
      ids.push_back(c >= 0x20 && c <= 0x7e ? 2 + (c - 0x20) : kUnk);
    } else {
      // one UNK per multi-byte UTF-8 sequence
      if ((c & 0xe0) == 0xc0) {
        advance = 2;
      } else if ((c & 0xf0) == 0xe0) {
        advance = 3;
      } else if ((c & 0xf8) == 0xf0) {
        advance = 4;
      }
      ids.push_back(kUnk);
    }
    i += advance;
  }
  while (static_cast<int64_t>(ids.size()) < max_chars) {
    ids.push_back(kPad);
  }
  return ids;
}

std::vector<int64_t> topk_indices(std::span<const double> values, int64_t k) {
  std::vector<int64_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  const int64_t keep = std::min<int64_t>(k, static_cast<int64_t>(values.size()));
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](int64_t a, int64_t b) {
                      if (values[static_cast<size_t>(a)] != values[static_cast<size_t>(b)]) {
                        return values[static_cast<size_t>(a)] > values[static_cast<size_t>(b)];
                      }
                      return a < b;
                    });
  order.resize(static_cast<size_t>(keep));
  return order;
}

CwiModel::CwiModel(CwiConfig config, std::vector<std::string> image_classes, uint64_t seed)
    : config_(std::move(config)), image_classes_(std::move(image_classes)) {
  config_.validate();
  std::sort(image_classes_.begin(), image_classes_.end());
  image_classes_.erase(std::unique(image_classes_.begin(), image_classes_.end()),
                       image_classes_.end());
  for (size_t i = 0; i < image_classes_.size(); ++i) {
    image_class_ids_[image_classes_[i]] = static_cast<int64_t>(i) + 2;  // after PAD, UNK
  }

  Rng rng(seed);
  char_table_ = Tensor::uniform({CharVocab::kSize, config_.char_emb}, -0.25, 0.25, rng, true);
  int64_t in_ch = config_.char_emb;
  for (size_t s = 0; s < config_.conv.size(); ++s) {
    const auto& spec = config_.conv[s];
    conv_kernels_.push_back(glorot_uniform({spec.kernel, in_ch, spec.channels},
                                           spec.kernel * in_ch, spec.channels, rng));
    conv_biases_.push_back(Tensor::zeros({1, spec.channels}, true));
    in_ch = spec.channels;
  }
  gn_gamma_ = Tensor::full({1, config_.char_feature_channels()}, 1.0, true);
  gn_beta_ = Tensor::zeros({1, config_.char_feature_channels()}, true);

  word_fwd_ = make_lstm(config_.word_emb_dim(), config_.word_lstm, rng);
  word_bwd_ = make_lstm(config_.word_emb_dim(), config_.word_lstm, rng);

  const int64_t image_rows = static_cast<int64_t>(image_classes_.size()) + 2;
  image_table_ = Tensor::uniform({image_rows, config_.image_emb}, -0.25, 0.25, rng, true);
  image_lstm_ = make_lstm(config_.image_emb, config_.image_lstm, rng);

  if (config_.use_attention) {
    const int64_t a = config_.attention_dim;
    attn_proj_char_ = glorot_uniform({config_.char_feature_width(), a},
                                     config_.char_feature_width(), a, rng);
    attn_proj_word_ = glorot_uniform({2 * config_.word_lstm, a}, 2 * config_.word_lstm, a, rng);
    attn_proj_image_ = glorot_uniform({config_.image_lstm, a}, config_.image_lstm, a, rng);
    attention_ = make_attention(a, rng);
  }

  fusion_fwd_ = make_lstm(config_.fusion_input_dim(), config_.fusion_lstm, rng);
  fusion_bwd_ = make_lstm(config_.fusion_input_dim(), config_.fusion_lstm, rng);

  proj_w_ = glorot_uniform({2 * config_.fusion_lstm, TagScheme::kNumTags},
                           2 * config_.fusion_lstm, TagScheme::kNumTags, rng);
  proj_b_ = Tensor::zeros({1, TagScheme::kNumTags}, true);
  crf_ = CrfParams::zeros(TagScheme::kNumTags);
}

void CwiModel::set_embeddings(std::shared_ptr<const EmbeddingTable> glove,
                              std::shared_ptr<const EmbeddingTable> fasttext) {
  if (!glove || !fasttext) {
    throw ConfigError("cwi: both embedding tables are required");
  }
  if (glove->dimension() != config_.glove_dim || fasttext->dimension() != config_.fasttext_dim) {
    throw ShapeError("cwi: embedding dimensions " + std::to_string(glove->dimension()) + "+" +
                     std::to_string(fasttext->dimension()) + " do not match config " +
                     std::to_string(config_.glove_dim) + "+" + std::to_string(config_.fasttext_dim));
  }
  glove_ = std::move(glove);
  fasttext_ = std::move(fasttext);
}

int64_t CwiModel::image_class_id(const std::string& label) const {
  auto it = image_class_ids_.find(label);
  return it == image_class_ids_.end() ? kImageUnk : it->second;
}

Tensor CwiModel::char_features(const std::string& word, bool training, Rng& rng) {
  const auto ids = CharVocab::encode(word, config_.max_chars);
  Tensor x = gather_rows(char_table_, ids);  // [max_chars x char_emb]

  std::vector<Tensor> stage_out;  // pool1, pool2, pool3 outputs for the skips
  for (int s = 0; s < 3; ++s) {
    x = add_rowwise(conv1d(x, conv_kernels_[static_cast<size_t>(s)], Padding::same),
                    conv_biases_[static_cast<size_t>(s)]);
    x = maxpool1d(x, config_.pool);
    stage_out.push_back(x);
  }
  x = add_rowwise(conv1d(x, conv_kernels_[3], Padding::same), conv_biases_[3]);
  x = concat_rows({stage_out[2], x});
  x = add_rowwise(conv1d(x, conv_kernels_[4], Padding::same), conv_biases_[4]);
  x = concat_rows({stage_out[1], x});
  x = add_rowwise(conv1d(x, conv_kernels_[5], Padding::same), conv_biases_[5]);
  x = concat_rows({stage_out[0], x});

  if (!config_.no_regularizers) {
    x = targeted_dropout(x, config_.drop_rate, config_.target_rate, training, rng,
                         config_.target_highest);
    x = sine_relu(x, config_.sine_relu_eps);
    x = group_norm(x, config_.groups, gn_gamma_, gn_beta_);
  }
  return reshape(x, {1, config_.char_feature_width()});
}

Tensor CwiModel::word_embedding(const std::string& token) const {
  if (!glove_ || !fasttext_) {
    throw ConfigError("cwi: embeddings not set");
  }
  std::vector<double> joint = glove_->lookup(token);
  const std::vector<double> ft = fasttext_->lookup(token);
  joint.insert(joint.end(), ft.begin(), ft.end());
  return Tensor::leaf({1, config_.word_emb_dim()}, std::move(joint));
}

Tensor CwiModel::image_features(const std::vector<ImageWord>& image_words) {
  std::vector<int64_t> ids;
  for (const auto& w : image_words) {
    ids.push_back(image_class_id(w.label));
    if (ids.size() == 5) {
      break;
    }
  }
  if (ids.empty()) {
    ids.push_back(kImagePad);  // zero-input LSTM over a single PAD step
  }
  std::vector<Tensor> steps;
  steps.reserve(ids.size());
  for (int64_t id : ids) {
    const int64_t one[] = {id};
    steps.push_back(gather_rows(image_table_, one));
  }
  Tensor h = Tensor::zeros({1, config_.image_lstm});
  Tensor c = Tensor::zeros({1, config_.image_lstm});
  for (const Tensor& x : steps) {
    std::tie(h, c) = lstm_step(x, h, c, image_lstm_);
  }
  return h;
}

Tensor CwiModel::forward(const Example& example, bool training, Rng& rng, bool ablate_image) {
  const int64_t n = std::min<int64_t>(static_cast<int64_t>(example.tokens.size()),
                                      config_.max_words);
  // identical char-id rows share one subgraph (PAD rows dominate)
  std::map<std::vector<int64_t>, Tensor> char_cache;
  std::vector<Tensor> char_feats;
  std::vector<Tensor> word_embs;
  const Tensor pad_word_emb = Tensor::zeros({1, config_.word_emb_dim()});
  for (int64_t t = 0; t < config_.max_words; ++t) {
    const bool real = t < n;
    const std::string& word = real ? example.tokens[static_cast<size_t>(t)] : std::string();
    auto ids = CharVocab::encode(word, config_.max_chars);
    auto it = char_cache.find(ids);
    if (it == char_cache.end()) {
      it = char_cache.emplace(std::move(ids), char_features(word, training, rng)).first;
    }
    char_feats.push_back(it->second);
    word_embs.push_back(real ? word_embedding(word) : pad_word_emb);
  }

  const auto word_feats = bilstm(word_embs, word_fwd_, word_bwd_);  // [1 x 2H] each

  Tensor image_feat = ablate_image ? Tensor::zeros({1, config_.image_lstm})
                                   : image_features(example.image_words);

  std::vector<Tensor> fusion_in;
  fusion_in.reserve(static_cast<size_t>(config_.max_words));
  for (int64_t t = 0; t < config_.max_words; ++t) {
    const size_t idx = static_cast<size_t>(t);
    if (config_.use_attention) {
      const Tensor modalities[] = {
          matmul(char_feats[idx], attn_proj_char_),
          matmul(word_feats[idx], attn_proj_word_),
          matmul(image_feat, attn_proj_image_),
      };
      fusion_in.push_back(modality_attention(modalities, attention_));
    } else {
      fusion_in.push_back(concat_cols({char_feats[idx], word_feats[idx], image_feat}));
    }
  }

  const auto fused = bilstm(fusion_in, fusion_fwd_, fusion_bwd_);
  std::vector<Tensor> emission_rows;
  emission_rows.reserve(fused.size());
  for (const Tensor& h : fused) {
    emission_rows.push_back(add(matmul(h, proj_w_), proj_b_));
  }
  return concat_rows(std::span<const Tensor>(emission_rows));
}

Tensor CwiModel::loss(const Example& example, bool training, Rng& rng) {
  const int64_t n = std::min<int64_t>(static_cast<int64_t>(example.tokens.size()),
                                      config_.max_words);
  if (n < 1) {
    throw ContractError("cwi loss: empty example '" + example.id + "'");
  }
  std::vector<int> tags;
  tags.reserve(static_cast<size_t>(n));
  for (int64_t t = 0; t < n; ++t) {
    const int idx = TagScheme::index_of(example.tags[static_cast<size_t>(t)]);
    if (idx < 0) {
      throw ContractError("cwi loss: unknown tag '" + example.tags[static_cast<size_t>(t)] + "'");
    }
    tags.push_back(idx);
  }
  const Tensor emissions = forward(example, training, rng);
  const Tensor unpadded = slice_rows(emissions, 0, n);
  return mul_scalar(crf_log_likelihood(unpadded, tags, crf_), -1.0);
}

std::vector<int> CwiModel::predict(const Example& example, bool mask_illegal) {
  const int64_t n = std::min<int64_t>(static_cast<int64_t>(example.tokens.size()),
                                      config_.max_words);
  if (n < 1) {
    throw ContractError("cwi predict: empty example '" + example.id + "'");
  }
  Rng rng(0);  // inference path draws nothing
  const Tensor emissions = forward(example, /*training=*/false, rng);
  const Tensor unpadded = slice_rows(emissions, 0, n);
  auto [path, score] = viterbi_decode(unpadded, crf_, mask_illegal);
  (void)score;
  while (path.size() < example.tokens.size()) {
    path.push_back(0);  // overflow past max_words: O
  }
  return path;
}

std::vector<NamedParam> CwiModel::parameters() {
  std::vector<NamedParam> params;
  params.push_back({"char.embedding", char_table_});
  for (size_t s = 0; s < conv_kernels_.size(); ++s) {
    params.push_back({"char.conv" + std::to_string(s + 1) + ".kernels", conv_kernels_[s]});
    params.push_back({"char.conv" + std::to_string(s + 1) + ".bias", conv_biases_[s]});
  }
  params.push_back({"char.group_norm.gamma", gn_gamma_});
  params.push_back({"char.group_norm.beta", gn_beta_});
  for (auto& p : word_fwd_.named("word.lstm_fwd")) {
    params.push_back(p);
  }
  for (auto& p : word_bwd_.named("word.lstm_bwd")) {
    params.push_back(p);
  }
  params.push_back({"image.embedding", image_table_});
  for (auto& p : image_lstm_.named("image.lstm")) {
    params.push_back(p);
  }
  if (config_.use_attention) {
    params.push_back({"attention.proj_char", attn_proj_char_});
    params.push_back({"attention.proj_word", attn_proj_word_});
    params.push_back({"attention.proj_image", attn_proj_image_});
    for (auto& p : attention_.named("attention")) {
      params.push_back(p);
    }
  }
  for (auto& p : fusion_fwd_.named("fusion.lstm_fwd")) {
    params.push_back(p);
  }
  for (auto& p : fusion_bwd_.named("fusion.lstm_bwd")) {
    params.push_back(p);
  }
  params.push_back({"head.weight", proj_w_});
  params.push_back({"head.bias", proj_b_});
  for (auto& p : crf_.named("crf")) {
    params.push_back(p);
  }
  return params;
}

}  // namespace mmner
