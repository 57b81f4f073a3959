#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "mmner/tagscheme.hpp"

namespace mmner {

struct TypeMetrics {
  size_t tp = 0;
  size_t predicted = 0;  // tp + fp
  size_t gold = 0;       // tp + fn (support)
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool zero_support = false;
};

struct EvalReport {
  static constexpr std::array<std::string_view, 4> kTypes = {"PER", "LOC", "ORG", "MISC"};
  std::map<std::string, TypeMetrics> per_type;
  TypeMetrics overall;  // micro-averaged
};

/// Span-level scoring: a predicted span is a true positive iff its
/// (start, end, type) triple matches a gold span exactly. Predictions are
/// read leniently (stray I-X opens a span, scorer convention); gold must be
/// legal BIO2.
EvalReport evaluate(const std::vector<std::vector<std::string>>& gold,
                    const std::vector<std::vector<std::string>>& pred);
EvalReport evaluate_indices(const std::vector<std::vector<int>>& gold,
                            const std::vector<std::vector<int>>& pred);

/// Fixed-width table in the Per. / Loc. / Org. / Misc. / Prec. / Recall / F1
/// column order; per-type cells carry the type F1, everything in percent with
/// two decimals.
std::string report_format(const EvalReport& report);

/// key=value lines for machine consumption.
std::string report_kv(const EvalReport& report);

/// Parses a table produced by report_format back into the seven numbers
/// (percent units, row order as printed).
std::vector<double> parse_report_row(const std::string& table);

}  // namespace mmner
