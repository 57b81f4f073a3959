#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmner/tagscheme.hpp"

namespace mmner {

struct ImageWord {
  std::string label;
  double probability = 0.0;

  bool operator==(const ImageWord&) const = default;
};

/// One post: word tokens, aligned BIO2 tags, and up to five image descriptors
/// sorted by descending probability.
struct Example {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::vector<ImageWord> image_words;

  bool operator==(const Example&) const = default;
};

enum class ParseMode { strict, lenient };

using LogFn = std::function<void(const std::string&)>;

/// CoNLL column format: token per line, tag in the last whitespace-separated
/// column, blank line between sentences. -DOCSTART- sentences are skipped.
/// In lenient mode a stray I-X is repaired to B-X (logged); strict mode
/// raises instead.
std::vector<Example> parse_conll(std::istream& in, ParseMode mode = ParseMode::strict,
                                 const LogFn& log = {});
std::string serialize_conll(const std::vector<Example>& examples);

/// Sidecar TSV: image id, then alternating label / probability fields,
/// at most five pairs per record.
using Sidecar = std::map<std::string, std::vector<ImageWord>>;
Sidecar parse_sidecar(std::istream& in);

/// TMN format: an optional `IMGID:<id>` line opens each sentence block,
/// followed by CoNLL token lines. Image descriptors are joined in from the
/// sidecar; strict mode requires every id to resolve.
std::vector<Example> parse_tmn(std::istream& in, const Sidecar& sidecar,
                               ParseMode mode = ParseMode::strict, const LogFn& log = {});
std::string serialize_tmn(const std::vector<Example>& examples);
std::string serialize_sidecar(const Sidecar& sidecar);

/// Validates every Example invariant (length agreement, BIO2 legality,
/// probability bounds); throws ContractError on violation.
void validate_example(const Example& example);

struct CorpusStats {
  size_t sentences = 0;
  size_t tokens = 0;
  std::map<std::string, size_t> entities_by_type;
  size_t total_entities = 0;
};

CorpusStats corpus_stats(const std::vector<Example>& examples);

/// Word -> dense vector table with the seeded uniform [-0.25, 0.25] OOV
/// policy; OOV draws are stable per (token, seed).
class EmbeddingTable {
 public:
  EmbeddingTable(int dimension, uint64_t seed);

  int dimension() const { return dimension_; }
  size_t size() const { return table_.size(); }
  bool contains(const std::string& token) const { return table_.count(token) != 0; }

  /// Stored vector, or the seeded OOV vector for unknown tokens.
  std::vector<double> lookup(const std::string& token) const;

  void insert(const std::string& token, std::vector<double> vec);

 private:
  int dimension_;
  uint64_t seed_;
  std::unordered_map<std::string, std::vector<double>> table_;
};

/// Text lines "token v1 ... vd". Duplicate tokens keep the first occurrence
/// (logged); a dimension mismatch raises with its line number.
EmbeddingTable load_embeddings(std::istream& in, int expected_dim, uint64_t seed,
                               const LogFn& log = {});

/// URL removal (scheme-prefixed substrings) followed by whitespace
/// tokenization.
std::vector<std::string> preprocess_text(const std::string& raw);
std::string remove_urls(const std::string& raw);

}  // namespace mmner
