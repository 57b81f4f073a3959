#pragma once

#include <array>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace mmner {

/// The closed BIO2 label set, in the fixed order used for transition-matrix
/// indexing across checkpoints.
class TagScheme {
 public:
  static constexpr int kNumTags = 9;
  static constexpr std::array<std::string_view, kNumTags> kLabels = {
      "O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG", "B-MISC", "I-MISC"};

  static int index_of(std::string_view label);  // -1 if unknown
  static std::string_view label_of(int index);
  static bool is_begin(int index) { return label_of(index).front() == 'B'; }
  static bool is_inside(int index) { return label_of(index).front() == 'I'; }
  static std::string_view entity_type(int index);  // "PER", ... ; empty for O

  /// BIO2 legality: I-X may only follow B-X or I-X. `prev == -1` means
  /// sentence start.
  static bool transition_legal(int prev, int next);
  static bool sequence_legal(const std::vector<int>& tags);
};

struct EntitySpan {
  int start = 0;  // 1-based, inclusive
  int end = 0;    // 1-based, inclusive
  std::string type;

  bool operator==(const EntitySpan&) const = default;
  bool operator<(const EntitySpan& o) const {
    return std::tie(start, end, type) < std::tie(o.start, o.end, o.type);
  }
};

/// Maximal B-X (I-X)* runs. Strict mode requires a BIO2-legal sequence;
/// lenient mode opens a new span at a stray I-X (scorer convention).
std::vector<EntitySpan> extract_spans(const std::vector<int>& tags, bool strict = true);
std::vector<EntitySpan> extract_spans(const std::vector<std::string>& labels, bool strict = true);

}  // namespace mmner
