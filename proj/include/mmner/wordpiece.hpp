#pragma once

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace mmner {

/// Subword vocabulary, one token per line, line index = id. The usual five
/// specials must be present; continuation pieces carry the "##" marker.
class SubwordVocab {
 public:
  static SubwordVocab from_stream(std::istream& in);
  static SubwordVocab from_file(const std::string& path);

  size_t size() const { return tokens_.size(); }
  int id_of(const std::string& token) const;  // -1 if absent
  const std::string& token_of(int id) const;

  int pad_id() const { return pad_id_; }
  int unk_id() const { return unk_id_; }
  int cls_id() const { return cls_id_; }
  int sep_id() const { return sep_id_; }
  int mask_id() const { return mask_id_; }

  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Order-sensitive content hash, recorded in model configs.
  uint64_t content_hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int pad_id_ = -1, unk_id_ = -1, cls_id_ = -1, sep_id_ = -1, mask_id_ = -1;
};

struct Tokenized {
  std::vector<int> ids;
  std::vector<int> word_index;  // aligned with ids; -1 for [UNK]-free specials
};

/// Greedy longest-match segmentation of whitespace-split words; a word with
/// no covering becomes a single [UNK]. word_index maps each subword to its
/// source word.
Tokenized tokenize(const std::string& text, const SubwordVocab& vocab);
Tokenized tokenize_words(const std::vector<std::string>& words, const SubwordVocab& vocab);

/// Joins subword pieces back into words (strips continuation markers).
std::vector<std::string> detokenize(const std::vector<int>& ids, const SubwordVocab& vocab);

struct ModelInput {
  std::vector<int> ids;
  std::vector<int> segments;        // 0 text span, 1 image span
  std::vector<int> attention_mask;  // 1 on real tokens
  std::vector<int> word_index;      // -1 for specials and image subwords
  std::vector<int> first_subword;   // position of each word's first subword; -1 if truncated away
  bool truncated = false;
};

/// [CLS] text-subwords [SEP] image-label-subwords [SEP]. Text is truncated
/// (never image labels) when the sequence would exceed max_positions.
ModelInput assemble_input(const std::vector<std::string>& words,
                          const std::vector<std::string>& image_labels,
                          const SubwordVocab& vocab, int64_t max_positions);

}  // namespace mmner
