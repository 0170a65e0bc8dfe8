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

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace nrfbench {
namespace {

constexpr Label P = Label::kPositive;
constexpr Label N = Label::kNegative;

TEST(Rho, Examples) {
  const std::vector<Label> y{P, P, N, N};
  EXPECT_DOUBLE_EQ(UsefulnessRho(std::vector<double>{1, 1, -1, -1}, y), 1.0);
  EXPECT_DOUBLE_EQ(UsefulnessRho(std::vector<double>{0, 0, 0, 0}, y), 0.0);
  EXPECT_NEAR(UsefulnessRho(std::vector<double>{0.5, 0.1, -0.2, 0.4}, y), 0.1, 1e-15);
  EXPECT_THROW(UsefulnessRho(std::vector<double>{}, std::vector<Label>{}), Error);
}

std::vector<LabeledSample> InteriorSamples(int n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.3, 0.7);
  std::vector<LabeledSample> out;
  for (int i = 0; i < n; ++i) {
    Tensor x({d});
    for (double& v : x.data) v = u(rng);
    out.push_back({x, i % 2 ? N : P, "s", Split::kTest});
  }
  return out;
}

TEST(Gamma, LinearFeatureClosedForm) {
  const std::vector<double> w{0.3, -0.2, 0.5, -0.1};
  auto feature = [&](const Tensor& x, std::vector<double>& g) {
    g = w;
    double v = 0;
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * x.data[i];
    return v;
  };
  const auto data = InteriorSamples(50, 4, 1);
  ThreatModel tm;
  tm.epsilon = 0.2;
  tm.steps = 5;
  const RobustUsefulness ru = RobustUsefulnessGamma(feature, data, tm);
  const double w1 = 0.3 + 0.2 + 0.5 + 0.1;
  EXPECT_NEAR(ru.gamma, ru.rho - tm.epsilon * w1, 1e-6);
}

TEST(Gamma, ZeroBudgetEqualsRhoAndNeverExceedsIt) {
  SyntheticTaskSpec spec;
  spec.n_train = 60;
  spec.n_test = 2;
  spec.d = 6;
  const auto data = MakeSyntheticTask(spec).train;
  const auto clf = OneClassClassifier::Initialize(std::make_shared<IdentityEncoder>(Shape{6}), 4);
  std::vector<Label> labels;
  for (const auto& s : data) labels.push_back(s.y);
  for (std::size_t i = 0; i < clf.feature_dim(); ++i) {
    const ClassifierFeature feature(clf, i);
    std::vector<double> values;
    for (const auto& s : data) values.push_back(feature.Value(s.x));
    const double rho = UsefulnessRho(values, labels);
    ThreatModel tm;
    tm.steps = 3;
    tm.epsilon = 0.0;
    const auto zero = RobustUsefulnessGamma(feature, data, tm);
    EXPECT_NEAR(zero.rho, rho, 1e-12);
    EXPECT_NEAR(zero.gamma, rho, 1e-12);
    for (double eps : {0.05, 0.3}) {
      tm.epsilon = eps;
      tm.norm = i % 2 ? Norm::kL2 : Norm::kLinf;
      EXPECT_LE(RobustUsefulnessGamma(feature, data, tm, 5).gamma, rho + 1e-12);
    }
  }
}

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(AveragePrecision(std::vector<double>{0.9, 0.8, 0.2, 0.1},
                                    std::vector<Label>{P, P, N, N}),
                   1.0);
  EXPECT_NEAR(AveragePrecision(std::vector<double>{0.9, 0.8, 0.7, 0.6},
                               std::vector<Label>{P, N, P, N}),
              0.5 * (1.0 + 2.0 / 3.0), 1e-15);
  EXPECT_THROW(AveragePrecision(std::vector<double>{0.1}, std::vector<Label>{N}), Error);
  EXPECT_THROW(AveragePrecision(std::vector<double>{0.1, 0.2}, std::vector<Label>{P}), Error);
}

TEST(AveragePrecision, TiesFormOneThreshold) {
  // All tied: one threshold at recall 1, precision = prevalence.
  EXPECT_DOUBLE_EQ(AveragePrecision(std::vector<double>{0.5, 0.5, 0.5, 0.5},
                                    std::vector<Label>{N, P, N, N}),
                   0.25);
}

TEST(AveragePrecision, MatchesThresholdEnumerationOracle) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> scores(n);
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng() % 8) / 8.0;  // coarse grid forces ties
      labels[i] = rng() % 3 == 0 ? P : N;
    }
    labels[rng() % n] = P;
    ASSERT_NEAR(AveragePrecision(scores, labels), testing::BruteForceAp(scores, labels), 1e-12);
  }
}

TEST(RandomBaseline, TableCounts) {
  EXPECT_NEAR(RandomBaselineAp(100, 182).prevalence, 0.3546, 5e-5);
  EXPECT_DOUBLE_EQ(RandomBaselineAp(100, 0).prevalence, 1.0);
  EXPECT_NEAR(RandomBaselineAp(100, 290).prevalence, 0.256, 5e-4);
  EXPECT_NEAR(RandomBaselineAp(100, 2893).prevalence, 0.0334, 5e-5);
  EXPECT_THROW(RandomBaselineAp(0, 10), Error);
}

TEST(RandomBaseline, MonteCarlo) {
  const auto overall = RandomBaselineAp(100, 2893, 10000, 1);
  ASSERT_TRUE(overall.monte_carlo.has_value());
  EXPECT_GE(*overall.monte_carlo, 0.033);
  EXPECT_LE(*overall.monte_carlo, 0.037);
  // The finite-sample expectation sits about 0.01 above the prevalence here.
  const auto birds = RandomBaselineAp(100, 290, 3000, 2);
  EXPECT_NEAR(*birds.monte_carlo, 0.256, 0.015);
  EXPECT_GT(*birds.monte_carlo, birds.prevalence);
  EXPECT_DOUBLE_EQ(*RandomBaselineAp(5, 0, 10, 3).monte_carlo, 1.0);
}

TEST(MetricsAtTpr, Examples) {
  const auto sep = MetricsAtTpr(std::vector<double>{0.9, 0.8, 0.7, 0.1, 0.05},
                                std::vector<Label>{P, P, P, N, N});
  EXPECT_DOUBLE_EQ(sep.precision, 1.0);
  EXPECT_GE(sep.recall, 0.9);

  const auto flat = MetricsAtTpr(std::vector<double>{0.3, 0.3, 0.3, 0.3},
                                 std::vector<Label>{P, N, N, N});
  EXPECT_DOUBLE_EQ(flat.recall, 1.0);
  EXPECT_DOUBLE_EQ(flat.precision, 0.25);

  const auto small =
      MetricsAtTpr(std::vector<double>{0.9, 0.8, 0.7}, std::vector<Label>{P, P, N}, 0.9);
  EXPECT_LE(small.threshold, 0.8);
  EXPECT_DOUBLE_EQ(small.precision, 1.0);
  EXPECT_DOUBLE_EQ(small.recall, 1.0);
  EXPECT_DOUBLE_EQ(small.f1, 1.0);
}

TEST(Aggregate, Examples) {
  const auto a = AggregateRuns(std::vector<double>{1, 2, 3});
  EXPECT_DOUBLE_EQ(a.mean, 2.0);
  EXPECT_DOUBLE_EQ(a.std, 1.0);
  const auto b = AggregateRuns(std::vector<double>{0.7});
  EXPECT_DOUBLE_EQ(b.mean, 0.7);
  EXPECT_DOUBLE_EQ(b.std, 0.0);
  const auto c = AggregateRuns(std::vector<double>{0.94, 0.95, 0.94});
  EXPECT_NEAR(c.mean, 0.943333, 1e-6);
  EXPECT_NEAR(c.std, 0.0057735, 1e-6);
  EXPECT_EQ(FormatMeanStd(c), "0.943±0.006");
  EXPECT_THROW(AggregateRuns(std::vector<double>{}), Error);
}

// ---------------------------------------------------------------------------
// Reports

std::vector<EvalGroup> ThreeGroups() {
  return {{"a", DriftLevel::kSeen}, {"b", DriftLevel::kUnseenNear}, {"c", DriftLevel::kUnseenBoth}};
}

TEST(EvaluateRun, PerGroupSetsAndBaselines) {
  const std::vector<double> s{0.9, 0.8, 0.7, 0.6, 0.5};
  const std::vector<Label> y{P, P, N, N, N};
  const std::vector<std::string> g{"pos", "pos", "a", "b", "b"};
  const RunEvaluation e = EvaluateRun(s, y, g, "pos", ThreeGroups());
  EXPECT_DOUBLE_EQ(e.overall.ap, 1.0);
  EXPECT_DOUBLE_EQ(e.overall.baseline, 0.4);
  EXPECT_DOUBLE_EQ(e.per_group.at("a").baseline, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.per_group.at("b").baseline, 0.5);
  EXPECT_EQ(e.per_group.count("c"), 0u);  // absent from this split
}

TEST(Report, CsvRowsAndOrder) {
  const std::vector<double> s{0.9, 0.2, 0.8, 0.7, 0.1};
  const std::vector<Label> y{P, P, N, N, N};
  const std::vector<std::string> g{"pos", "pos", "c", "a", "b"};
  std::vector<RunEvaluation> runs;
  for (int k = 0; k < 3; ++k) runs.push_back(EvaluateRun(s, y, g, "pos", ThreeGroups()));
  const EvalReport report = AggregateReport(runs, ThreeGroups());
  const std::string csv = ReportCsv(report);
  std::vector<std::string> lines;
  std::stringstream ss(csv);
  for (std::string line; std::getline(ss, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "subclass,drift_tag,ap_mean,ap_std,baseline_ap,n_runs");
  EXPECT_EQ(lines[1].substr(0, 7), "a,seen,");
  EXPECT_EQ(lines[2].substr(0, 14), "b,unseen-near,");
  EXPECT_EQ(lines[3].substr(0, 14), "c,unseen-both,");
  EXPECT_EQ(lines[4].substr(0, 9), "overall,,");
  EXPECT_EQ(lines[4].back(), '3');
  EXPECT_EQ(report.overall->n_runs, 3);
  EXPECT_EQ(ReportCsv(AggregateReport(runs, ThreeGroups())), csv);
  EXPECT_THROW(AggregateReport({}, ThreeGroups()), Error);
}

TEST(Report, SvgBaselineBarFirst) {
  const std::vector<double> s{0.9, 0.1};
  const std::vector<Label> y{P, N};
  const std::vector<std::string> g{"pos", "a"};
  const EvalReport r = AggregateReport({EvaluateRun(s, y, g, "pos", ThreeGroups())}, ThreeGroups());
  const std::string svg = ReportSvg(r, "t", "#123456");
  const auto baseline = svg.find("fill=\"#2ca02c\"");
  const auto model = svg.find("fill=\"#123456\"");
  ASSERT_NE(baseline, std::string::npos);
  ASSERT_NE(model, std::string::npos);
  EXPECT_LT(baseline, model);
}

TEST(Report, TprColumns) {
  const std::vector<double> s{0.9, 0.8, 0.3};
  const std::vector<Label> y{P, N, P};
  const std::vector<std::string> g{"pos", "a", "pos"};
  const auto r = AggregateReport({EvaluateRun(s, y, g, "pos", ThreeGroups(), true)}, ThreeGroups());
  const std::string csv = ReportCsv(r);
  EXPECT_NE(csv.find(",precision90,recall90,f190\n"), std::string::npos);
  EXPECT_EQ(RunEvaluationFromJson(RunEvaluationToJson(EvaluateRun(s, y, g, "pos", ThreeGroups(), true)))
                .overall.tpr->precision,
            EvaluateRun(s, y, g, "pos", ThreeGroups(), true).overall.tpr->precision);
}

}  // namespace
}  // namespace nrfbench
