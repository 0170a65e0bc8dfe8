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

#include "test_util.hpp"

namespace nrfbench {
namespace {

struct Fixture {
  SyntheticTask task;
  OneClassClassifier clf;
};

Fixture MakeFixture() {
  SyntheticTaskSpec spec;
  spec.n_train = 300;
  spec.n_test = 120;
  spec.d = 8;
  spec.seed = 3;
  SyntheticTask task = MakeSyntheticTask(spec);
  TrainConfig cfg;
  cfg.epochs = 4;
  auto init = OneClassClassifier::Initialize(std::make_shared<IdentityEncoder>(Shape{8}), 1);
  return {task, TrainHead(init, task.train, {}, cfg).classifier};
}

ThreatModel Linf(double eps, int steps = 10) {
  ThreatModel tm;
  tm.epsilon = eps;
  tm.steps = steps;
  return tm;
}

TEST(RandomLabels, EmptyDeterministicAndBalanced) {
  EXPECT_TRUE(AssignRandomLabels(0, 1).empty());
  EXPECT_EQ(AssignRandomLabels(500, 9), AssignRandomLabels(500, 9));
  EXPECT_NE(AssignRandomLabels(500, 9), AssignRandomLabels(500, 10));
  const auto labels = AssignRandomLabels(10000, 0);
  const double frac = static_cast<double>(std::count(labels.begin(), labels.end(),
                                                     Label::kPositive)) / 10000.0;
  EXPECT_GE(frac, 0.48);
  EXPECT_LE(frac, 0.52);
}

TEST(GenerateNrf, CardinalityFeasibilityAndProvenance) {
  const Fixture fx = MakeFixture();
  const ThreatModel tm = Linf(0.25);
  const NrfSplits nrf =
      GenerateNrfDataset(fx.clf, ModelHash(fx.clf), fx.task.train, fx.task.test, tm, 4);
  ASSERT_EQ(nrf.train.samples.size(), fx.task.train.size());
  ASSERT_EQ(nrf.test.samples.size(), fx.task.test.size());
  EXPECT_EQ(nrf.train.source_model_hash, ModelHash(fx.clf));
  for (const NrfDataset* ds : {&nrf.train, &nrf.test}) {
    const auto& src = ds == &nrf.train ? fx.task.train : fx.task.test;
    for (std::size_t i = 0; i < ds->samples.size(); ++i) {
      const auto& delta = ds->deltas[i].data;
      const auto projected = Project(delta, tm);
      for (std::size_t k = 0; k < delta.size(); ++k) {
        ASSERT_NEAR(projected[k], delta[k], 1e-9);
        ASSERT_DOUBLE_EQ(ds->samples[i].x.data[k],
                         std::clamp(src[ds->original_index[i]].x.data[k] + delta[k], 0.0, 1.0));
      }
      EXPECT_EQ(ds->samples[i].subclass, src[ds->original_index[i]].subclass);
      EXPECT_EQ(ds->samples[i].split, src[ds->original_index[i]].split);
    }
  }
}

TEST(GenerateNrf, ZeroBudgetKeepsImages) {
  const Fixture fx = MakeFixture();
  const NrfSplits nrf =
      GenerateNrfDataset(fx.clf, "h", fx.task.train, fx.task.test, Linf(0.0), 4);
  for (std::size_t i = 0; i < fx.task.test.size(); ++i) {
    EXPECT_EQ(nrf.test.samples[i].x, fx.task.test[i].x);
  }
}

TEST(GenerateNrf, Deterministic) {
  const Fixture fx = MakeFixture();
  ThreatModel tm = Linf(0.3);
  tm.random_start = true;
  const auto a = GenerateNrfDataset(fx.clf, "h", fx.task.train, fx.task.test, tm, 11);
  const auto b = GenerateNrfDataset(fx.clf, "h", fx.task.train, fx.task.test, tm, 11);
  EXPECT_EQ(a.train.samples, b.train.samples);
  EXPECT_EQ(a.test.samples, b.test.samples);
  EXPECT_EQ(a.train.deltas, b.train.deltas);
}

TEST(GenerateNrf, LabelsIndependentOfOriginalLabels) {
  // 2x2 chi-square test of independence between y and y_nrf, df = 1; the
  // critical value at p = 0.01 is 6.635.
  SyntheticTaskSpec spec;
  spec.n_train = 3000;
  spec.n_test = 1000;
  spec.d = 4;
  const SyntheticTask task = MakeSyntheticTask(spec);
  const auto clf =
      OneClassClassifier::Initialize(std::make_shared<IdentityEncoder>(Shape{4}), 2);
  const auto nrf = GenerateNrfDataset(clf, "h", task.train, task.test, Linf(0.0, 1), 123);
  double n[2][2] = {{0, 0}, {0, 0}};
  for (const NrfDataset* ds : {&nrf.train, &nrf.test}) {
    const auto& src = ds == &nrf.train ? task.train : task.test;
    for (std::size_t i = 0; i < ds->samples.size(); ++i) {
      n[src[i].y == Label::kPositive][ds->samples[i].y == Label::kPositive] += 1;
    }
  }
  const double total = n[0][0] + n[0][1] + n[1][0] + n[1][1];
  double chi2 = 0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double expected = (n[a][0] + n[a][1]) * (n[0][b] + n[1][b]) / total;
      chi2 += (n[a][b] - expected) * (n[a][b] - expected) / expected;
    }
  }
  EXPECT_LT(chi2, 6.635);
}

TEST(GenerateNrf, EmptyInputsRejected) {
  const Fixture fx = MakeFixture();
  EXPECT_THROW(GenerateNrfDataset(fx.clf, "h", {}, {}, Linf(0.1), 0), Error);
}

TEST(NrfPersistence, RoundTrip) {
  const Fixture fx = MakeFixture();
  testing::TempDir dir("nrf");
  const auto nrf = GenerateNrfDataset(fx.clf, ModelHash(fx.clf), fx.task.train, fx.task.test,
                                      Linf(0.2), 5);
  DatasetManifest source;
  source.subclasses = SyntheticSubclasses(SyntheticTaskSpec{});
  WriteNrfDataset(nrf, source, dir.path());
  const NrfSplits back = ReadNrfDataset(dir.path());
  EXPECT_EQ(back.train.samples, nrf.train.samples);
  EXPECT_EQ(back.test.samples, nrf.test.samples);
  EXPECT_EQ(back.test.original_index, nrf.test.original_index);
  EXPECT_EQ(back.train.source_model_hash, ModelHash(fx.clf));
  EXPECT_EQ(back.train.tm, nrf.train.tm);
  const DatasetManifest m = LoadManifest(dir / "manifest.json");
  EXPECT_EQ(m.provenance["nrf_source_model"], ModelHash(fx.clf));
}

TEST(Probe, Verdicts) {
  EXPECT_EQ(ClassifyNrfUsefulness(1.000, 0.5), NrfVerdict::kUseful);
  EXPECT_EQ(ClassifyNrfUsefulness(0.491, 0.5), NrfVerdict::kNotUseful);
  EXPECT_EQ(ClassifyNrfUsefulness(0.58, 0.5, 0.1), NrfVerdict::kMixed);

  EvalReport report;
  EXPECT_THROW(NrfUsefulnessProbe(report, 0.5), Error);
  report.overall = ReportRow{kOverallRow, "", 0.97, 0.01, 3, 0.5, std::nullopt};
  EXPECT_EQ(NrfUsefulnessProbe(report, 0.5), NrfVerdict::kUseful);
}

}  // namespace
}  // namespace nrfbench
