/*
 * Copyright 2026 The nrfbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Per-run evaluation, multi-run aggregation into EvalReport, and the CSV /
// SVG renderings of a report.

#ifndef NRFBENCH_REPORT_HPP_
#define NRFBENCH_REPORT_HPP_

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nrfbench/data.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/metrics.hpp"

namespace nrfbench {

inline constexpr const char* kOverallRow = "overall";

/// A negative (sub)class to report on, with its drift tag.
struct EvalGroup {
  std::string name;
  DriftLevel drift = DriftLevel::kSeen;
};

/// Negative subclasses of a manifest ordered by drift level (stable).
inline std::vector<EvalGroup> EvalGroupsOf(const DatasetManifest& m) {
  std::vector<EvalGroup> out;
  for (const auto& s : m.subclasses) {
    if (s.role == Role::kNegative) out.push_back({s.name, TagDrift(s)});
  }
  std::stable_sort(out.begin(), out.end(), [](const EvalGroup& a, const EvalGroup& b) {
    return static_cast<int>(a.drift) < static_cast<int>(b.drift);
  });
  return out;
}

/// One run's metrics for one evaluation set.
struct RunMetric {
  double ap = 0;
  double baseline = 0;  // empirical prevalence of the evaluation set
  std::optional<TprMetrics> tpr;
};

struct RunEvaluation {
  std::map<std::string, RunMetric> per_group;
  RunMetric overall;
};

/// Scores one run. Each sample carries a label and a group (its original
/// subclass). The set for negative group g is every sample whose group is
/// `positive_group` or g; the overall set is every sample.
inline RunEvaluation EvaluateRun(std::span<const double> scores, std::span<const Label> labels,
                                 std::span<const std::string> groups,
                                 const std::string& positive_group,
                                 const std::vector<EvalGroup>& negatives,
                                 bool with_tpr = false) {
  detail::CheckPaired(scores.size(), labels.size());
  detail::CheckPaired(scores.size(), groups.size());
  auto metric = [&](const std::vector<std::size_t>& idx) {
    std::vector<double> s;
    std::vector<Label> l;
    for (std::size_t i : idx) {
      s.push_back(scores[i]);
      l.push_back(labels[i]);
    }
    RunMetric m;
    m.ap = AveragePrecision(s, l);
    m.baseline = static_cast<double>(std::count(l.begin(), l.end(), Label::kPositive)) /
                 static_cast<double>(l.size());
    if (with_tpr) m.tpr = MetricsAtTpr(s, l, 0.90);
    return m;
  };
  RunEvaluation out;
  std::vector<std::size_t> all(scores.size());
  std::iota(all.begin(), all.end(), 0);
  out.overall = metric(all);
  for (const auto& g : negatives) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (groups[i] == positive_group || groups[i] == g.name) idx.push_back(i);
    }
    if (std::none_of(idx.begin(), idx.end(), [&](std::size_t i) { return groups[i] == g.name; })) {
      continue;  // subclass absent from this split
    }
    out.per_group[g.name] = metric(idx);
  }
  return out;
}

struct ReportRow {
  std::string subclass;
  std::string drift_tag;
  double ap_mean = 0;
  double ap_std = 0;
  int n_runs = 0;
  double baseline_ap = 0;
  std::optional<TprMetrics> tpr;  // averaged over runs

  MeanStd ap() const { return {ap_mean, ap_std}; }
};

struct EvalReport {
  std::vector<ReportRow> per_subclass;  // drift order
  std::optional<ReportRow> overall;

  const ReportRow* find(const std::string& name) const {
    if (name == kOverallRow) return overall ? &*overall : nullptr;
    for (const auto& r : per_subclass) {
      if (r.subclass == name) return &r;
    }
    return nullptr;
  }
};

/// Mean ± sample std of AP over runs; baselines and TPR metrics averaged.
inline EvalReport AggregateReport(const std::vector<RunEvaluation>& runs,
                                  const std::vector<EvalGroup>& negatives) {
  if (runs.empty()) throw Error(ErrorKind::kEmptyResults, "no runs to aggregate");
  auto build = [&](const std::string& name, const std::string& tag,
                   const std::vector<const RunMetric*>& ms) {
    ReportRow row;
    row.subclass = name;
    row.drift_tag = tag;
    std::vector<double> aps;
    double base = 0;
    for (const auto* m : ms) {
      aps.push_back(m->ap);
      base += m->baseline;
    }
    const MeanStd agg = AggregateRuns(aps);
    row.ap_mean = agg.mean;
    row.ap_std = agg.std;
    row.n_runs = static_cast<int>(ms.size());
    row.baseline_ap = base / static_cast<double>(ms.size());
    if (ms.front()->tpr) {
      TprMetrics t;
      for (const auto* m : ms) {
        t.threshold += m->tpr->threshold;
        t.precision += m->tpr->precision;
        t.recall += m->tpr->recall;
        t.f1 += m->tpr->f1;
      }
      const double k = 1.0 / static_cast<double>(ms.size());
      t.threshold *= k, t.precision *= k, t.recall *= k, t.f1 *= k;
      row.tpr = t;
    }
    return row;
  };
  EvalReport report;
  for (const auto& g : negatives) {
    std::vector<const RunMetric*> ms;
    for (const auto& r : runs) {
      if (auto it = r.per_group.find(g.name); it != r.per_group.end()) ms.push_back(&it->second);
    }
    if (!ms.empty()) report.per_subclass.push_back(build(g.name, DriftLevelName(g.drift), ms));
  }
  std::vector<const RunMetric*> overall;
  for (const auto& r : runs) overall.push_back(&r.overall);
  report.overall = build(kOverallRow, "", overall);
  return report;
}

inline std::string ReportCsv(const EvalReport& report) {
  const bool tpr = report.overall && report.overall->tpr.has_value();
  std::ostringstream out;
  out << "subclass,drift_tag,ap_mean,ap_std,baseline_ap,n_runs";
  if (tpr) out << ",precision90,recall90,f190";
  out << "\n";
  auto row = [&](const ReportRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f,%.6f,%d", r.subclass.c_str(),
                  r.drift_tag.c_str(), r.ap_mean, r.ap_std, r.baseline_ap, r.n_runs);
    out << buf;
    if (tpr && r.tpr) {
      std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f", r.tpr->precision, r.tpr->recall,
                    r.tpr->f1);
      out << buf;
    }
    out << "\n";
  };
  for (const auto& r : report.per_subclass) row(r);
  if (report.overall) row(*report.overall);
  return out.str();
}

// Grouped bar chart: one group per row, baseline bar first, then the model.
inline std::string ReportSvg(const EvalReport& report, const std::string& title,
                             const std::string& model_colour = "#1f77b4") {
  std::vector<const ReportRow*> rows;
  for (const auto& r : report.per_subclass) rows.push_back(&r);
  if (report.overall) rows.push_back(&*report.overall);
  const int bar = 18, gap = 14, left = 50, top = 30, height = 200;
  const int width = left + static_cast<int>(rows.size()) * (2 * bar + gap) + gap;
  std::ostringstream svg;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "font-family=\"sans-serif\" font-size=\"10\">\n",
                width, top + height + 60);
  svg << buf;
  std::snprintf(buf, sizeof(buf), "<text x=\"%d\" y=\"16\" font-size=\"12\">%s</text>\n", left,
                title.c_str());
  svg << buf;
  for (int t = 0; t <= 4; ++t) {
    const double y = top + height - t * height / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%d\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n",
                  left, y, width, y, left - 4, y + 3, t / 4.0);
    svg << buf;
  }
  int x = left + gap;
  for (const ReportRow* r : rows) {
    const double hb = r->baseline_ap * height, hm = r->ap_mean * height;
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%.1f\" width=\"%d\" height=\"%.1f\" fill=\"#2ca02c\"/>\n"
                  "<rect x=\"%d\" y=\"%.1f\" width=\"%d\" height=\"%.1f\" fill=\"%s\"/>\n",
                  x, top + height - hb, bar, hb, x + bar, top + height - hm, bar, hm,
                  model_colour.c_str());
    svg << buf;
    const double lo = std::max(0.0, r->ap_mean - r->ap_std) * height;
    const double hi = std::min(1.0, r->ap_mean + r->ap_std) * height;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#000\"/>\n"
                  "<text x=\"%d\" y=\"%d\" transform=\"rotate(30 %d %d)\">%s</text>\n",
                  x + bar + bar / 2, top + height - lo, x + bar + bar / 2, top + height - hi,
                  x, top + height + 12, x, top + height + 12, r->subclass.c_str());
    svg << buf;
    x += 2 * bar + gap;
  }
  svg << "</svg>\n";
  return svg.str();
}

// JSON round-trip for per-run evaluations (used by the CLI between phases).

inline nlohmann::json RunMetricToJson(const RunMetric& m) {
  nlohmann::json j{{"ap", m.ap}, {"baseline", m.baseline}};
  if (m.tpr) {
    j["tpr"] = {{"threshold", m.tpr->threshold},
                {"precision", m.tpr->precision},
                {"recall", m.tpr->recall},
                {"f1", m.tpr->f1}};
  }
  return j;
}

inline RunMetric RunMetricFromJson(const nlohmann::json& j) {
  RunMetric m;
  m.ap = j.at("ap").get<double>();
  m.baseline = j.at("baseline").get<double>();
  if (j.contains("tpr")) {
    const auto& t = j["tpr"];
    m.tpr = TprMetrics{t.at("threshold").get<double>(), t.at("precision").get<double>(),
                       t.at("recall").get<double>(), t.at("f1").get<double>()};
  }
  return m;
}

inline nlohmann::json RunEvaluationToJson(const RunEvaluation& e) {
  nlohmann::json groups = nlohmann::json::object();
  for (const auto& [k, v] : e.per_group) groups[k] = RunMetricToJson(v);
  return {{"overall", RunMetricToJson(e.overall)}, {"per_group", groups}};
}

inline RunEvaluation RunEvaluationFromJson(const nlohmann::json& j) {
  RunEvaluation e;
  e.overall = RunMetricFromJson(j.at("overall"));
  for (const auto& [k, v] : j.at("per_group").items()) e.per_group[k] = RunMetricFromJson(v);
  return e;
}

}  // namespace nrfbench

#endif  // NRFBENCH_REPORT_HPP_
