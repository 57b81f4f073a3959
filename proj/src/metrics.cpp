#include "mmner/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "mmner/error.hpp"

namespace mmner {

namespace {

void finish(TypeMetrics& m) {
  m.zero_support = m.gold == 0;
  m.precision = m.predicted ? static_cast<double>(m.tp) / static_cast<double>(m.predicted) : 0.0;
  m.recall = m.gold ? static_cast<double>(m.tp) / static_cast<double>(m.gold) : 0.0;
  const double pr = m.precision + m.recall;
  m.f1 = pr > 0.0 ? 2.0 * m.precision * m.recall / pr : 0.0;
}

}  // namespace

EvalReport evaluate(const std::vector<std::vector<std::string>>& gold,
                    const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size()) {
    throw ContractError("evaluate: " + std::to_string(gold.size()) + " gold vs " +
                        std::to_string(pred.size()) + " predicted sentences");
  }
  EvalReport report;
  for (auto type : EvalReport::kTypes) {
    report.per_type[std::string(type)] = TypeMetrics{};
  }
  for (size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size()) {
      throw ContractError("evaluate: sentence " + std::to_string(s + 1) + " has " +
                          std::to_string(gold[s].size()) + " gold vs " +
                          std::to_string(pred[s].size()) + " predicted tokens");
    }
    const auto gold_spans = extract_spans(gold[s], /*strict=*/true);
    const auto pred_spans = extract_spans(pred[s], /*strict=*/false);
    std::set<EntitySpan> gold_set(gold_spans.begin(), gold_spans.end());
    for (const auto& span : gold_spans) {
      ++report.per_type[span.type].gold;
    }
    for (const auto& span : pred_spans) {
      auto& m = report.per_type[span.type];
      ++m.predicted;
      if (gold_set.count(span)) {
        ++m.tp;
      }
    }
  }
  for (auto& [type, m] : report.per_type) {
    report.overall.tp += m.tp;
    report.overall.predicted += m.predicted;
    report.overall.gold += m.gold;
    finish(m);
  }
  finish(report.overall);
  return report;
}

EvalReport evaluate_indices(const std::vector<std::vector<int>>& gold,
                            const std::vector<std::vector<int>>& pred) {
  auto to_labels = [](const std::vector<std::vector<int>>& seqs) {
    std::vector<std::vector<std::string>> out(seqs.size());
    for (size_t s = 0; s < seqs.size(); ++s) {
      out[s].reserve(seqs[s].size());
      for (int t : seqs[s]) {
        out[s].emplace_back(TagScheme::label_of(t));
      }
    }
    return out;
  };
  return evaluate(to_labels(gold), to_labels(pred));
}

std::string report_format(const EvalReport& report) {
  auto pct = [](double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
    return std::string(buf);
  };
  std::ostringstream out;
  const std::array<std::string, 7> headers = {"Per.",  "Loc.",   "Org.", "Misc.",
                                              "Prec.", "Recall", "F1"};
  std::array<std::string, 7> cells;
  for (size_t i = 0; i < EvalReport::kTypes.size(); ++i) {
    cells[i] = pct(report.per_type.at(std::string(EvalReport::kTypes[i])).f1);
  }
  cells[4] = pct(report.overall.precision);
  cells[5] = pct(report.overall.recall);
  cells[6] = pct(report.overall.f1);
  for (size_t i = 0; i < headers.size(); ++i) {
    out << headers[i];
    for (size_t pad = headers[i].size(); pad < 8; ++pad) {
      out << ' ';
    }
  }
  out << '\n';
  for (size_t i = 0; i < cells.size(); ++i) {
    out << cells[i];
    for (size_t pad = cells[i].size(); pad < 8; ++pad) {
      out << ' ';
    }
  }
  out << '\n';
  return out.str();
}

std::string report_kv(const EvalReport& report) {
  std::ostringstream out;
  auto emit = [&](const std::string& prefix, const TypeMetrics& m) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", m.precision);
    out << prefix << "_precision=" << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.6f", m.recall);
    out << prefix << "_recall=" << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.6f", m.f1);
    out << prefix << "_f1=" << buf << '\n';
    out << prefix << "_support=" << m.gold << '\n';
    if (m.zero_support) {
      out << prefix << "_zero_support=1\n";
    }
  };
  for (auto type : EvalReport::kTypes) {
    std::string lower(type);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    emit(lower, report.per_type.at(std::string(type)));
  }
  emit("overall", report.overall);
  return out.str();
}

std::vector<double> parse_report_row(const std::string& table) {
  std::istringstream stream(table);
  std::string header_line, value_line;
  if (!std::getline(stream, header_line) || !std::getline(stream, value_line)) {
    throw ParseError("report table: expected header and value lines");
  }
  std::istringstream values(value_line);
  std::vector<double> out;
  double v = 0.0;
  while (values >> v) {
    out.push_back(v);
  }
  if (out.size() != 7) {
    throw ParseError("report table: expected 7 numeric cells, got " +
                     std::to_string(out.size()));
  }
  return out;
}

}  // namespace mmner
