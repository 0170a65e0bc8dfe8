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

#ifndef NRFBENCH_METRICS_HPP_
#define NRFBENCH_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nrfbench/attack.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/model.hpp"
#include "nrfbench/tensor.hpp"

namespace nrfbench {

namespace detail {

inline void CheckPaired(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorKind::kShapeMismatch, "scores and labels differ in length");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feature usefulness

/// Empirical E[y * f(x)] for one feature.
inline double UsefulnessRho(std::span<const double> values, std::span<const Label> labels) {
  detail::CheckPaired(values.size(), labels.size());
  if (values.empty()) throw Error(ErrorKind::kEmptyInput, "usefulness of an empty view");
  double acc = 0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += Sign(labels[i]) * values[i];
  return acc / static_cast<double>(values.size());
}

/// Feature i of a classifier recentred to [-1,1] via 2f-1, as a
/// differentiable objective usable by MinimizeInBall.
class ClassifierFeature {
 public:
  ClassifierFeature(const OneClassClassifier& clf, std::size_t index)
      : clf_(&clf), index_(index) {
    if (index >= clf.feature_dim()) {
      throw Error(ErrorKind::kShapeMismatch, "feature index out of range");
    }
  }

  double operator()(const Tensor& x, std::vector<double>& grad) const {
    const Activations a = clf_->Forward(x);
    std::vector<double> seed(clf_->feature_dim(), 0.0);
    seed[index_] = 2.0;
    grad = clf_->FeatureVjp(x, seed);
    return 2.0 * a.f[index_] - 1.0;
  }

  double Value(const Tensor& x) const { return 2.0 * clf_->Features(x)[index_] - 1.0; }

 private:
  const OneClassClassifier* clf_;
  std::size_t index_;
};

struct RobustUsefulness {
  double rho = 0;    // clean E[y f(x)]
  double gamma = 0;  // PGD-estimated E[inf_delta y f(x+delta)]; an upper bound
};

/// PGD-estimated robust usefulness: the inner infimum is approximated by
/// minimizing y * f(x + delta) per sample, so the result can only
/// overestimate the true worst case.
template <InputObjective Feature>
RobustUsefulness RobustUsefulnessGamma(const Feature& feature,
                                       const std::vector<LabeledSample>& data,
                                       const ThreatModel& tm, std::uint64_t seed = 0) {
  if (data.empty()) throw Error(ErrorKind::kEmptyInput, "no samples");
  RobustUsefulness out;
  std::vector<double> scratch;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double y = Sign(data[i].y);
    out.rho += y * feature(data[i].x, scratch);
    const AttackResult r = MinimizeInBall(
        [&](const Tensor& x, std::vector<double>& g) {
          const double v = feature(x, g);
          for (double& gi : g) gi *= y;
          return y * v;
        },
        data[i].x, tm, MixSeed(seed, i));
    out.gamma += r.loss_trace[static_cast<std::size_t>(r.best_step)];
  }
  const auto n = static_cast<double>(data.size());
  out.rho /= n;
  out.gamma /= n;
  return out;
}

// ---------------------------------------------------------------------------
// Ranking metrics

/// Step-interpolated average precision of the +1 class: sum over descending
/// distinct score thresholds of (R_k - R_{k-1}) * P_k. Tied scores form one
/// threshold.
inline double AveragePrecision(std::span<const double> scores, std::span<const Label> labels) {
  detail::CheckPaired(scores.size(), labels.size());
  const auto positives = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), Label::kPositive));
  if (positives == 0) throw Error(ErrorKind::kNoPositives, "average precision");
  for (double s : scores) {
    if (std::isnan(s)) throw Error(ErrorKind::kNonFiniteLoss, "NaN score");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0, prev_recall = 0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i, ++seen) {
      if (labels[order[i]] == Label::kPositive) ++tp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

struct BaselineAp {
  double prevalence = 0;                 // P / (P + N)
  std::optional<double> monte_carlo;     // E[AP] under uniformly random scores
};

/// Expected AP of a random ranker. The analytic value is the prevalence; a
/// seeded Monte-Carlo estimate of E[AP] is added when `trials` > 0.
inline BaselineAp RandomBaselineAp(long positives, long negatives, int trials = 0,
                                   std::uint64_t seed = 0) {
  if (positives < 1) throw Error(ErrorKind::kNoPositives, "random baseline");
  if (negatives < 0) throw Error(ErrorKind::kInvalidConfig, "negative count < 0");
  BaselineAp out;
  const long total = positives + negatives;
  out.prevalence = static_cast<double>(positives) / static_cast<double>(total);
  if (trials > 0) {
    std::mt19937_64 rng(seed);
    std::vector<long> ranks(static_cast<std::size_t>(total));
    double acc = 0;
    for (int t = 0; t < trials; ++t) {
      // Partial Fisher-Yates: the first P slots are the ranks of positives.
      std::iota(ranks.begin(), ranks.end(), 1L);
      for (long k = 0; k < positives; ++k) {
        std::uniform_int_distribution<long> pick(k, total - 1);
        std::swap(ranks[static_cast<std::size_t>(k)],
                  ranks[static_cast<std::size_t>(pick(rng))]);
      }
      std::sort(ranks.begin(), ranks.begin() + positives);
      double ap = 0;
      for (long k = 0; k < positives; ++k) {
        ap += static_cast<double>(k + 1) / static_cast<double>(ranks[static_cast<std::size_t>(k)]);
      }
      acc += ap / static_cast<double>(positives);
    }
    out.monte_carlo = acc / trials;
  }
  return out;
}

struct TprMetrics {
  double threshold = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Precision/recall/F1 at the highest threshold whose TPR reaches
/// `tpr_floor` (samples with score >= threshold are predicted positive).
inline TprMetrics MetricsAtTpr(std::span<const double> scores, std::span<const Label> labels,
                               double tpr_floor = 0.90) {
  detail::CheckPaired(scores.size(), labels.size());
  const auto positives = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), Label::kPositive));
  if (positives == 0) throw Error(ErrorKind::kNoPositives, "metrics at TPR");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  TprMetrics m;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i, ++seen) {
      if (labels[order[i]] == Label::kPositive) ++tp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    // 1e-12 slack so e.g. 9/10 counts as reaching a 0.9 floor.
    if (recall + 1e-12 >= tpr_floor || i == order.size()) {
      m.threshold = s;
      m.recall = recall;
      m.precision = static_cast<double>(tp) / static_cast<double>(seen);
      m.f1 = (m.precision + m.recall) > 0
                 ? 2 * m.precision * m.recall / (m.precision + m.recall)
                 : 0.0;
      break;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Aggregation over runs

struct MeanStd {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for a single run
};

inline MeanStd AggregateRuns(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorKind::kEmptyInput, "no runs to aggregate");
  MeanStd out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

/// "0.943±0.007"
inline std::string FormatMeanStd(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f±%.3f", m.mean, m.std);
  return buf;
}

}  // namespace nrfbench

#endif  // NRFBENCH_METRICS_HPP_
