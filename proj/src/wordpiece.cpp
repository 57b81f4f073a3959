#include "mmner/wordpiece.hpp"

#include <fstream>
#include <sstream>

#include "mmner/error.hpp"
#include "mmner/rng.hpp"

namespace mmner {

SubwordVocab SubwordVocab::from_stream(std::istream& in) {
  SubwordVocab vocab;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const int id = static_cast<int>(vocab.tokens_.size());
    if (!vocab.ids_.emplace(line, id).second) {
      throw ParseError("vocab: duplicate token '" + line + "' at line " + std::to_string(id + 1));
    }
    vocab.tokens_.push_back(line);
  }
  if (vocab.tokens_.empty()) {
    throw ConfigError("vocab: empty vocabulary");
  }
  vocab.pad_id_ = vocab.id_of("[PAD]");
  vocab.unk_id_ = vocab.id_of("[UNK]");
  vocab.cls_id_ = vocab.id_of("[CLS]");
  vocab.sep_id_ = vocab.id_of("[SEP]");
  vocab.mask_id_ = vocab.id_of("[MASK]");
  if (vocab.pad_id_ < 0 || vocab.unk_id_ < 0 || vocab.cls_id_ < 0 || vocab.sep_id_ < 0 ||
      vocab.mask_id_ < 0) {
    throw ConfigError("vocab: missing one of [PAD] [UNK] [CLS] [SEP] [MASK]");
  }
  return vocab;
}

SubwordVocab SubwordVocab::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("vocab: cannot open " + path);
  }
  return from_stream(in);
}

int SubwordVocab::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? -1 : it->second;
}

uint64_t SubwordVocab::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& token : tokens_) {
    h = fnv1a(token, h);
    h = fnv1a(std::string_view("\n", 1), h);
  }
  return h;
}

const std::string& SubwordVocab::token_of(int id) const {
  if (id < 0 || id >= static_cast<int>(tokens_.size())) {
    throw ContractError("vocab: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<size_t>(id)];
}

namespace {

// Greedy longest match of one word; empty result means no covering exists.
std::vector<int> segment_word(const std::string& word, const SubwordVocab& vocab) {
  std::vector<int> pieces;
  size_t start = 0;
  while (start < word.size()) {
    size_t end = word.size();
    int found = -1;
    while (end > start) {
      std::string piece = word.substr(start, end - start);
      if (start > 0) {
        piece = "##" + piece;
      }
      found = vocab.id_of(piece);
      if (found >= 0) {
        break;
      }
      --end;
    }
    if (found < 0) {
      return {};
    }
    pieces.push_back(found);
    start = end;
  }
  return pieces;
}

}  // namespace

Tokenized tokenize_words(const std::vector<std::string>& words, const SubwordVocab& vocab) {
  Tokenized out;
  for (size_t w = 0; w < words.size(); ++w) {
    if (words[w].empty()) {
      continue;
    }
    const auto pieces = segment_word(words[w], vocab);
    if (pieces.empty()) {
      out.ids.push_back(vocab.unk_id());
      out.word_index.push_back(static_cast<int>(w));
      continue;
    }
    for (int id : pieces) {
      out.ids.push_back(id);
      out.word_index.push_back(static_cast<int>(w));
    }
  }
  return out;
}

Tokenized tokenize(const std::string& text, const SubwordVocab& vocab) {
  std::istringstream ss(text);
  std::vector<std::string> words;
  std::string word;
  while (ss >> word) {
    words.push_back(std::move(word));
  }
  return tokenize_words(words, vocab);
}

std::vector<std::string> detokenize(const std::vector<int>& ids, const SubwordVocab& vocab) {
  std::vector<std::string> words;
  for (int id : ids) {
    const std::string& piece = vocab.token_of(id);
    if (piece.rfind("##", 0) == 0 && !words.empty()) {
      words.back() += piece.substr(2);
    } else {
      words.push_back(piece);
    }
  }
  return words;
}

ModelInput assemble_input(const std::vector<std::string>& words,
                          const std::vector<std::string>& image_labels,
                          const SubwordVocab& vocab, int64_t max_positions) {
  if (image_labels.size() > 5) {
    throw ContractError("assemble_input: more than 5 image labels");
  }
  Tokenized text = tokenize_words(words, vocab);
  const Tokenized image = tokenize_words(image_labels, vocab);

  ModelInput out;
  // [CLS] + text + [SEP] + image + [SEP]
  const int64_t fixed = 3 + static_cast<int64_t>(image.ids.size());
  const int64_t text_budget = max_positions - fixed;
  if (text_budget < 0) {
    throw ContractError("assemble_input: image labels alone exceed max_positions");
  }
  if (static_cast<int64_t>(text.ids.size()) > text_budget) {
    text.ids.resize(static_cast<size_t>(text_budget));
    text.word_index.resize(static_cast<size_t>(text_budget));
    out.truncated = true;
  }

  out.ids.push_back(vocab.cls_id());
  out.segments.push_back(0);
  out.word_index.push_back(-1);
  for (size_t i = 0; i < text.ids.size(); ++i) {
    out.ids.push_back(text.ids[i]);
    out.segments.push_back(0);
    out.word_index.push_back(text.word_index[i]);
  }
  out.ids.push_back(vocab.sep_id());
  out.segments.push_back(0);
  out.word_index.push_back(-1);
  for (int id : image.ids) {
    out.ids.push_back(id);
    out.segments.push_back(1);
    out.word_index.push_back(-1);
  }
  out.ids.push_back(vocab.sep_id());
  out.segments.push_back(1);
  out.word_index.push_back(-1);
  out.attention_mask.assign(out.ids.size(), 1);

  out.first_subword.assign(words.size(), -1);
  for (size_t pos = 0; pos < out.word_index.size(); ++pos) {
    const int w = out.word_index[pos];
    if (w >= 0 && out.first_subword[static_cast<size_t>(w)] < 0) {
      out.first_subword[static_cast<size_t>(w)] = static_cast<int>(pos);
    }
  }
  return out;
}

}  // namespace mmner
