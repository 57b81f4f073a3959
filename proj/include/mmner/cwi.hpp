#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mmner/crf.hpp"
#include "mmner/layers.hpp"
#include "mmner/seqdata.hpp"
#include "mmner/tensor.hpp"

namespace mmner {

struct ConvSpec {
  int64_t kernel = 0;
  int64_t channels = 0;
};

/// Dimensions of the character/word/image network. Defaults follow the
/// reference configuration; everything scales down for miniature builds.
struct CwiConfig {
  int64_t max_words = 35;
  int64_t max_chars = 40;
  int64_t char_emb = 40;
  // six convolutions; skips concatenate (pool3, conv4), (pool2, conv5),
  // (pool1, conv6) along the length axis
  std::vector<ConvSpec> conv = {{2, 16}, {3, 32}, {4, 64}, {4, 64}, {3, 32}, {2, 16}};
  int64_t pool = 2;
  int64_t glove_dim = 200;
  int64_t fasttext_dim = 300;
  int64_t word_lstm = 100;  // per direction
  int64_t image_emb = 50;
  int64_t image_lstm = 50;
  int64_t fusion_lstm = 100;  // per direction
  double drop_rate = 0.25;
  double target_rate = 0.4;
  bool target_highest = false;
  double sine_relu_eps = 0.0025;
  int64_t groups = 16;
  bool use_attention = false;
  int64_t attention_dim = 200;
  bool no_regularizers = false;

  int64_t word_emb_dim() const { return glove_dim + fasttext_dim; }

  /// Ceil-mode pooled lengths after stages 1..3 of the conv chain.
  int64_t pooled_len(int stage) const;
  /// Length of the per-word character feature map after the final skip.
  int64_t char_feature_len() const { return pooled_len(1) + pooled_len(2) + 2 * pooled_len(3); }
  int64_t char_feature_channels() const { return conv.back().channels; }
  /// F_c: flattened per-word character feature width.
  int64_t char_feature_width() const { return char_feature_len() * char_feature_channels(); }
  int64_t fusion_input_dim() const;

  /// Checks every concatenation in the chain; throws ShapeError on a
  /// configuration that cannot be built.
  void validate() const;
};

/// Character vocabulary: PAD, UNK, then printable ASCII. Wider Unicode code
/// points fold to UNK.
struct CharVocab {
  static constexpr int64_t kPad = 0;
  static constexpr int64_t kUnk = 1;
  static constexpr int64_t kSize = 2 + 95;  // printable ASCII 0x20..0x7e

  static std::vector<int64_t> encode(const std::string& word, int64_t max_chars);
};

/// Indices of the k largest entries, ordered by descending value with index
/// ascending as the tie-break.
std::vector<int64_t> topk_indices(std::span<const double> values, int64_t k);

class CwiModel {
 public:
  static constexpr int64_t kImagePad = 0;
  static constexpr int64_t kImageUnk = 1;

  CwiModel(CwiConfig config, std::vector<std::string> image_classes, uint64_t seed);

  void set_embeddings(std::shared_ptr<const EmbeddingTable> glove,
                      std::shared_ptr<const EmbeddingTable> fasttext);

  /// Per-word character feature row [1 x F_c].
  Tensor char_features(const std::string& word, bool training, Rng& rng);

  /// Image-word feature [1 x image_lstm] from the descriptor labels.
  Tensor image_features(const std::vector<ImageWord>& image_words);

  /// Emissions [max_words x 9]; PAD positions are masked out downstream.
  Tensor forward(const Example& example, bool training, Rng& rng, bool ablate_image = false);

  /// Negative CRF log-likelihood over the unpadded positions.
  Tensor loss(const Example& example, bool training, Rng& rng);

  /// Viterbi tags for every token (overflow past max_words reported as O).
  std::vector<int> predict(const Example& example, bool mask_illegal = false);

  std::vector<NamedParam> parameters();
  const CwiConfig& config() const { return config_; }
  const std::vector<std::string>& image_classes() const { return image_classes_; }
  CrfParams& crf_params() { return crf_; }

  int64_t image_class_id(const std::string& label) const;

 private:
  Tensor word_embedding(const std::string& token) const;

  CwiConfig config_;
  std::vector<std::string> image_classes_;
  std::unordered_map<std::string, int64_t> image_class_ids_;

  Tensor char_table_;
  std::vector<Tensor> conv_kernels_;
  std::vector<Tensor> conv_biases_;
  Tensor gn_gamma_, gn_beta_;
  LstmParams word_fwd_, word_bwd_;
  Tensor image_table_;
  LstmParams image_lstm_;
  LstmParams fusion_fwd_, fusion_bwd_;
  Tensor attn_proj_char_, attn_proj_word_, attn_proj_image_;
  AttentionParams attention_;
  Tensor proj_w_, proj_b_;
  CrfParams crf_;

  std::shared_ptr<const EmbeddingTable> glove_;
  std::shared_ptr<const EmbeddingTable> fasttext_;
};

}  // namespace mmner
