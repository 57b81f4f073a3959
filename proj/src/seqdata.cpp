#include "mmner/seqdata.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <sstream>

#include "mmner/error.hpp"
#include "mmner/rng.hpp"

namespace mmner {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream ss(line);
  std::string field;
  while (ss >> field) {
    fields.push_back(std::move(field));
  }
  return fields;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  return line;
}

void log_to(const LogFn& log, const std::string& msg) {
  if (log) {
    log(msg);
  }
}

// Shared body for the CoNLL and TMN readers. `allow_imgid` turns on the
// leading IMGID:<id> line per sentence block.
std::vector<Example> parse_columns(std::istream& in, ParseMode mode, const LogFn& log,
                                   bool allow_imgid) {
  std::vector<Example> examples;
  Example current;
  size_t line_no = 0;
  size_t auto_id = 0;
  bool in_sentence = false;

  auto flush = [&]() {
    if (!in_sentence) {
      return;
    }
    in_sentence = false;
    if (current.tokens.empty()) {
      current = Example{};
      return;
    }
    if (current.tokens.front() == "-DOCSTART-") {
      current = Example{};
      return;
    }
    if (current.id.empty()) {
      current.id = "s" + std::to_string(++auto_id);
    }
    // repair pass for lenient mode, validation for strict
    int prev = -1;
    for (size_t i = 0; i < current.tags.size(); ++i) {
      const int idx = TagScheme::index_of(current.tags[i]);
      if (!TagScheme::transition_legal(prev, idx)) {
        if (mode == ParseMode::strict) {
          throw ContractError("example '" + current.id + "': tag '" + current.tags[i] +
                              "' at token " + std::to_string(i + 1) +
                              " violates BIO2 (strict mode)");
        }
        current.tags[i][0] = 'B';
        log_to(log, "example '" + current.id + "': repaired stray " +
                        std::string(TagScheme::label_of(idx)) + " at token " +
                        std::to_string(i + 1) + " to " + current.tags[i]);
      }
      prev = TagScheme::index_of(current.tags[i]);
    }
    examples.push_back(std::move(current));
    current = Example{};
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty()) {
      flush();
      continue;
    }
    if (allow_imgid && line.rfind("IMGID:", 0) == 0) {
      if (in_sentence && !current.tokens.empty()) {
        flush();
      }
      in_sentence = true;
      current.id = line.substr(6);
      if (current.id.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": empty IMGID");
      }
      continue;
    }
    const auto fields = split_ws(line);
    if (fields.size() < 2) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected token and tag columns, got '" + line + "'");
    }
    const std::string& tag = fields.back();
    if (TagScheme::index_of(tag) < 0) {
      throw ParseError("line " + std::to_string(line_no) + ": unknown tag '" + tag + "'");
    }
    in_sentence = true;
    current.tokens.push_back(fields.front());
    current.tags.push_back(tag);
  }
  flush();
  return examples;
}

}  // namespace

std::vector<Example> parse_conll(std::istream& in, ParseMode mode, const LogFn& log) {
  return parse_columns(in, mode, log, /*allow_imgid=*/false);
}

std::string serialize_conll(const std::vector<Example>& examples) {
  std::ostringstream out;
  for (const auto& ex : examples) {
    for (size_t i = 0; i < ex.tokens.size(); ++i) {
      out << ex.tokens[i] << ' ' << ex.tags[i] << '\n';
    }
    out << '\n';
  }
  return out.str();
}

Sidecar parse_sidecar(std::istream& in) {
  Sidecar sidecar;
  std::string raw;
  size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty()) {
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() < 1 || fields.size() % 2 == 0) {
      throw ParseError("sidecar line " + std::to_string(line_no) +
                       ": expected id plus (label, probability) pairs");
    }
    const size_t pairs = (fields.size() - 1) / 2;
    if (pairs > 5) {
      throw ParseError("sidecar line " + std::to_string(line_no) + ": more than 5 descriptors");
    }
    std::vector<ImageWord> words;
    double total = 0.0;
    for (size_t i = 0; i < pairs; ++i) {
      ImageWord w;
      w.label = fields[1 + 2 * i];
      try {
        size_t consumed = 0;
        w.probability = std::stod(fields[2 + 2 * i], &consumed);
        if (consumed != fields[2 + 2 * i].size()) {
          throw std::invalid_argument("trailing characters");
        }
      } catch (const std::exception&) {
        throw ParseError("sidecar line " + std::to_string(line_no) +
                         ": malformed probability '" + fields[2 + 2 * i] + "'");
      }
      if (w.probability < 0.0 || w.probability > 1.0) {
        throw ContractError("sidecar line " + std::to_string(line_no) + ": probability " +
                            std::to_string(w.probability) + " outside [0, 1]");
      }
      total += w.probability;
      words.push_back(std::move(w));
    }
    if (total > 1.0 + 1e-9) {
      throw ContractError("sidecar line " + std::to_string(line_no) +
                          ": probabilities sum to " + std::to_string(total) + " > 1");
    }
    std::stable_sort(words.begin(), words.end(),
                     [](const ImageWord& a, const ImageWord& b) {
                       return a.probability > b.probability;
                     });
    sidecar[fields[0]] = std::move(words);
  }
  return sidecar;
}

std::vector<Example> parse_tmn(std::istream& in, const Sidecar& sidecar, ParseMode mode,
                               const LogFn& log) {
  std::vector<Example> examples = parse_columns(in, mode, log, /*allow_imgid=*/true);
  for (auto& ex : examples) {
    auto it = sidecar.find(ex.id);
    if (it == sidecar.end()) {
      if (mode == ParseMode::strict) {
        throw ContractError("example '" + ex.id + "' has no sidecar entry (strict mode)");
      }
      log_to(log, "example '" + ex.id + "': no sidecar entry, image_words left empty");
      continue;
    }
    ex.image_words = it->second;
  }
  return examples;
}

std::string serialize_tmn(const std::vector<Example>& examples) {
  std::ostringstream out;
  for (const auto& ex : examples) {
    out << "IMGID:" << ex.id << '\n';
    for (size_t i = 0; i < ex.tokens.size(); ++i) {
      out << ex.tokens[i] << ' ' << ex.tags[i] << '\n';
    }
    out << '\n';
  }
  return out.str();
}

std::string serialize_sidecar(const Sidecar& sidecar) {
  std::ostringstream out;
  for (const auto& [id, words] : sidecar) {
    out << id;
    for (const auto& w : words) {
      out << '\t' << w.label << '\t' << w.probability;
    }
    out << '\n';
  }
  return out.str();
}

void validate_example(const Example& example) {
  if (example.tokens.empty()) {
    throw ContractError("example '" + example.id + "': no tokens");
  }
  if (example.tokens.size() != example.tags.size()) {
    throw ContractError("example '" + example.id + "': " + std::to_string(example.tokens.size()) +
                        " tokens vs " + std::to_string(example.tags.size()) + " tags");
  }
  std::vector<int> ids;
  for (const auto& tag : example.tags) {
    const int idx = TagScheme::index_of(tag);
    if (idx < 0) {
      throw ContractError("example '" + example.id + "': unknown tag '" + tag + "'");
    }
    ids.push_back(idx);
  }
  if (!TagScheme::sequence_legal(ids)) {
    throw ContractError("example '" + example.id + "': tag sequence violates BIO2");
  }
  if (example.image_words.size() > 5) {
    throw ContractError("example '" + example.id + "': more than 5 image words");
  }
  double total = 0.0;
  for (const auto& w : example.image_words) {
    if (w.probability < 0.0 || w.probability > 1.0) {
      throw ContractError("example '" + example.id + "': image probability out of range");
    }
    total += w.probability;
  }
  if (total > 1.0 + 1e-9) {
    throw ContractError("example '" + example.id + "': image probabilities sum to " +
                        std::to_string(total));
  }
}

CorpusStats corpus_stats(const std::vector<Example>& examples) {
  CorpusStats stats;
  stats.sentences = examples.size();
  for (const auto& ex : examples) {
    stats.tokens += ex.tokens.size();
    for (const auto& span : extract_spans(ex.tags, /*strict=*/false)) {
      ++stats.entities_by_type[span.type];
      ++stats.total_entities;
    }
  }
  return stats;
}

EmbeddingTable::EmbeddingTable(int dimension, uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension <= 0) {
    throw ConfigError("embedding dimension must be positive");
  }
}

std::vector<double> EmbeddingTable::lookup(const std::string& token) const {
  auto it = table_.find(token);
  if (it != table_.end()) {
    return it->second;
  }
  // OOV: uniform in [-0.25, 0.25], keyed by (token, seed) only.
  Rng rng(fnv1a(token) ^ (seed_ * 0x9e3779b97f4a7c15ULL));
  std::vector<double> vec(static_cast<size_t>(dimension_));
  for (auto& v : vec) {
    v = rng.uniform(-0.25, 0.25);
  }
  return vec;
}

void EmbeddingTable::insert(const std::string& token, std::vector<double> vec) {
  if (static_cast<int>(vec.size()) != dimension_) {
    throw ShapeError("embedding for '" + token + "' has dimension " +
                     std::to_string(vec.size()) + ", table expects " +
                     std::to_string(dimension_));
  }
  table_.emplace(token, std::move(vec));
}

EmbeddingTable load_embeddings(std::istream& in, int expected_dim, uint64_t seed,
                               const LogFn& log) {
  EmbeddingTable table(expected_dim, seed);
  std::string raw;
  size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_cr(raw);
    if (line.empty()) {
      continue;
    }
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> vec;
    vec.reserve(static_cast<size_t>(expected_dim));
    double v = 0.0;
    while (ss >> v) {
      vec.push_back(v);
    }
    if (static_cast<int>(vec.size()) != expected_dim) {
      throw ParseError("embeddings line " + std::to_string(line_no) + ": token '" + token +
                       "' has " + std::to_string(vec.size()) + " values, expected " +
                       std::to_string(expected_dim));
    }
    if (table.contains(token)) {
      log_to(log, "embeddings line " + std::to_string(line_no) + ": duplicate token '" + token +
                      "' ignored (first occurrence kept)");
      continue;
    }
    table.insert(token, std::move(vec));
  }
  return table;
}

std::string remove_urls(const std::string& raw) {
  // Drop every scheme://... substring up to the next whitespace.
  std::string out;
  out.reserve(raw.size());
  size_t i = 0;
  while (i < raw.size()) {
    const size_t sep = raw.find("://", i);
    if (sep == std::string::npos) {
      out.append(raw, i, std::string::npos);
      break;
    }
    // scan back over the scheme name
    size_t scheme_start = sep;
    while (scheme_start > i &&
           (std::isalnum(static_cast<unsigned char>(raw[scheme_start - 1])) ||
            raw[scheme_start - 1] == '+' || raw[scheme_start - 1] == '-' ||
            raw[scheme_start - 1] == '.')) {
      --scheme_start;
    }
    if (scheme_start == sep ||
        !std::isalpha(static_cast<unsigned char>(raw[scheme_start]))) {
      // "://" without a scheme in front; keep it as ordinary text
      out.append(raw, i, sep + 3 - i);
      i = sep + 3;
      continue;
    }
    out.append(raw, i, scheme_start - i);
    size_t end = sep + 3;
    while (end < raw.size() && !std::isspace(static_cast<unsigned char>(raw[end]))) {
      ++end;
    }
    i = end;
  }
  return out;
}

std::vector<std::string> preprocess_text(const std::string& raw) {
  std::istringstream ss(remove_urls(raw));
  std::vector<std::string> tokens;
  std::string token;
  while (ss >> token) {
    tokens.push_back(std::move(token));
  }
  return tokens;
}

}  // namespace mmner
