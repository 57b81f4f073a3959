#include "mmner/tagscheme.hpp"

#include "mmner/error.hpp"

namespace mmner {

int TagScheme::index_of(std::string_view label) {
  for (int i = 0; i < kNumTags; ++i) {
    if (kLabels[static_cast<size_t>(i)] == label) {
      return i;
    }
  }
  return -1;
}

std::string_view TagScheme::label_of(int index) {
  if (index < 0 || index >= kNumTags) {
    throw ContractError("tag index " + std::to_string(index) + " out of range");
  }
  return kLabels[static_cast<size_t>(index)];
}

std::string_view TagScheme::entity_type(int index) {
  std::string_view label = label_of(index);
  if (label == "O") {
    return {};
  }
  return label.substr(2);
}

bool TagScheme::transition_legal(int prev, int next) {
  if (next < 0 || next >= kNumTags) {
    return false;
  }
  if (!is_inside(next)) {
    return true;
  }
  if (prev < 0) {
    return false;
  }
  // I-X requires B-X or I-X immediately before: same type, begin or inside.
  return entity_type(prev) == entity_type(next) && prev != 0;
}

bool TagScheme::sequence_legal(const std::vector<int>& tags) {
  int prev = -1;
  for (int t : tags) {
    if (!transition_legal(prev, t)) {
      return false;
    }
    prev = t;
  }
  return true;
}

std::vector<EntitySpan> extract_spans(const std::vector<int>& tags, bool strict) {
  std::vector<EntitySpan> spans;
  int open_start = -1;
  std::string open_type;
  auto close = [&](int end) {
    if (open_start >= 0) {
      spans.push_back({open_start + 1, end + 1, open_type});
      open_start = -1;
    }
  };
  int prev = -1;
  for (size_t i = 0; i < tags.size(); ++i) {
    const int t = tags[i];
    if (t < 0 || t >= TagScheme::kNumTags) {
      throw ContractError("extract_spans: tag index " + std::to_string(t) + " out of range");
    }
    if (strict && !TagScheme::transition_legal(prev, t)) {
      throw ContractError("extract_spans: illegal BIO2 transition at position " +
                          std::to_string(i + 1));
    }
    if (t == 0) {
      close(static_cast<int>(i) - 1);
    } else if (TagScheme::is_begin(t)) {
      close(static_cast<int>(i) - 1);
      open_start = static_cast<int>(i);
      open_type = TagScheme::entity_type(t);
    } else {  // inside
      const bool continues =
          open_start >= 0 && open_type == TagScheme::entity_type(t);
      if (!continues) {
        // lenient: stray I-X starts a new span
        close(static_cast<int>(i) - 1);
        open_start = static_cast<int>(i);
        open_type = TagScheme::entity_type(t);
      }
    }
    prev = t;
  }
  close(static_cast<int>(tags.size()) - 1);
  return spans;
}

std::vector<EntitySpan> extract_spans(const std::vector<std::string>& labels, bool strict) {
  std::vector<int> tags;
  tags.reserve(labels.size());
  for (const auto& label : labels) {
    const int idx = TagScheme::index_of(label);
    if (idx < 0) {
      throw ContractError("extract_spans: unknown label '" + label + "'");
    }
    tags.push_back(idx);
  }
  return extract_spans(tags, strict);
}

}  // namespace mmner
