#pragma once

// Shared test helpers: independent oracles (path enumeration, naive loops,
// span recounts) and corpus builders. Everything here recomputes expected
// values without touching the implementation paths under test.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mmner/crf.hpp"
#include "mmner/rng.hpp"
#include "mmner/seqdata.hpp"
#include "mmner/tagscheme.hpp"
#include "mmner/tensor.hpp"
#include "mmner/wordpiece.hpp"

namespace testutil {

// ---- brute-force CRF ------------------------------------------------------

inline double path_score(const mmner::Tensor& emissions, const mmner::CrfParams& params,
                         const std::vector<int>& path) {
  const int64_t n = emissions.shape()[0];
  const int64_t k = emissions.shape()[1];
  const auto em = emissions.data();
  const auto trans = params.transitions.data();
  double s = params.start.data()[static_cast<size_t>(path[0])] +
             em[static_cast<size_t>(path[0])];
  for (int64_t t = 1; t < n; ++t) {
    s += trans[static_cast<size_t>(path[static_cast<size_t>(t - 1)] * k +
                                   path[static_cast<size_t>(t)])] +
         em[static_cast<size_t>(t * k + path[static_cast<size_t>(t)])];
  }
  s += params.stop.data()[static_cast<size_t>(path[static_cast<size_t>(n - 1)])];
  return s;
}

template <typename Fn>
void for_each_path(int64_t n, int64_t k, Fn&& fn) {
  std::vector<int> path(static_cast<size_t>(n), 0);
  while (true) {
    fn(path);
    int64_t pos = n - 1;
    while (pos >= 0 && ++path[static_cast<size_t>(pos)] == k) {
      path[static_cast<size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) {
      break;
    }
  }
}

inline double enumerate_log_partition(const mmner::Tensor& emissions,
                                      const mmner::CrfParams& params) {
  std::vector<double> scores;
  for_each_path(emissions.shape()[0], emissions.shape()[1],
                [&](const std::vector<int>& path) {
                  scores.push_back(path_score(emissions, params, path));
                });
  const double mx = *std::max_element(scores.begin(), scores.end());
  double acc = 0.0;
  for (double s : scores) {
    acc += std::exp(s - mx);
  }
  return mx + std::log(acc);
}

inline std::pair<std::vector<int>, double> enumerate_best_path(const mmner::Tensor& emissions,
                                                               const mmner::CrfParams& params) {
  std::vector<int> best_path;
  double best = -std::numeric_limits<double>::infinity();
  for_each_path(emissions.shape()[0], emissions.shape()[1],
                [&](const std::vector<int>& path) {
                  const double s = path_score(emissions, params, path);
                  if (s > best) {
                    best = s;
                    best_path = path;
                  }
                });
  return {best_path, best};
}

inline mmner::CrfParams random_crf(mmner::Rng& rng, double scale = 1.0) {
  auto params = mmner::CrfParams::zeros(mmner::TagScheme::kNumTags);
  for (auto& v : params.transitions.data()) {
    v = rng.uniform(-scale, scale);
  }
  for (auto& v : params.start.data()) {
    v = rng.uniform(-scale, scale);
  }
  for (auto& v : params.stop.data()) {
    v = rng.uniform(-scale, scale);
  }
  return params;
}

// ---- random tag sequences ---------------------------------------------------

inline std::vector<std::string> random_legal_tags(size_t len, mmner::Rng& rng) {
  std::vector<std::string> tags;
  int prev = -1;
  for (size_t t = 0; t < len; ++t) {
    int tag;
    do {
      tag = static_cast<int>(rng.uniform_int(mmner::TagScheme::kNumTags));
    } while (!mmner::TagScheme::transition_legal(prev, tag));
    tags.emplace_back(mmner::TagScheme::label_of(tag));
    prev = tag;
  }
  return tags;
}

inline std::vector<std::string> random_any_tags(size_t len, mmner::Rng& rng) {
  std::vector<std::string> tags;
  for (size_t t = 0; t < len; ++t) {
    tags.emplace_back(mmner::TagScheme::label_of(
        static_cast<int>(rng.uniform_int(mmner::TagScheme::kNumTags))));
  }
  return tags;
}

// ---- span recount oracle ----------------------------------------------------

struct SpanCounts {
  size_t tp = 0;
  size_t gold = 0;
  size_t predicted = 0;
};

inline SpanCounts recount_spans(const std::vector<std::vector<std::string>>& gold,
                                const std::vector<std::vector<std::string>>& pred) {
  using Key = std::tuple<size_t, int, int, std::string>;
  std::set<Key> gold_set, pred_set;
  for (size_t s = 0; s < gold.size(); ++s) {
    for (const auto& span : mmner::extract_spans(gold[s], true)) {
      gold_set.insert({s, span.start, span.end, span.type});
    }
    for (const auto& span : mmner::extract_spans(pred[s], false)) {
      pred_set.insert({s, span.start, span.end, span.type});
    }
  }
  std::vector<Key> hits;
  std::set_intersection(gold_set.begin(), gold_set.end(), pred_set.begin(), pred_set.end(),
                        std::back_inserter(hits));
  return {hits.size(), gold_set.size(), pred_set.size()};
}

// ---- misc --------------------------------------------------------------------

inline mmner::SubwordVocab mini_vocab() {
  std::ostringstream text;
  text << "[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\n";
  for (char c = 'a'; c <= 'z'; ++c) {
    text << c << '\n';
  }
  for (char c = 'a'; c <= 'z'; ++c) {
    text << "##" << c << '\n';
  }
  text << "cat\ndog\nbird\nthe\nruns\nriver\njumps\n##ing\n##er\n";
  std::istringstream in(text.str());
  return mmner::SubwordVocab::from_stream(in);
}

inline std::string data_path(const std::string& name) {
  return std::string(MMNER_DATA_DIR) + "/" + name;
}

}  // namespace testutil
