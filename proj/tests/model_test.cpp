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

#include <cmath>
#include <random>

#include "test_util.hpp"

namespace nrfbench {
namespace {

using testing::CentralDifference;

std::shared_ptr<const Encoder> Identity(std::size_t d) {
  return std::make_shared<IdentityEncoder>(Shape{d});
}

// W1 = W2 = I, zero biases, W3 = w3_scale * I, b3 = b3_value.
HeadParams DiagonalHead(std::size_t r, double w3_scale, double b3_value, double s = 1.0) {
  HeadParams p = HeadParams::Zeros(r);
  for (std::size_t i = 0; i < r; ++i) {
    p.w1[i * r + i] = 1.0;
    p.w2[i * r + i] = 1.0;
    p.w3[i * r + i] = w3_scale;
    p.b3[i] = b3_value;
  }
  p.sigma_bump = 1.0;
  p.rbf_scale = s;
  return p;
}

Tensor RandomInput(std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  Tensor x({d});
  for (double& v : x.data) v = u(rng);
  return x;
}

TEST(Bump, ClosedForms) {
  EXPECT_DOUBLE_EQ(BumpActivation(0.0, 1.0), 1.0);
  EXPECT_NEAR(BumpActivation(1.0, 1.0), 0.60653065971263342, 1e-15);
  EXPECT_NEAR(BumpActivation(2.5, 2.5), std::exp(-0.5), 1e-15);
  EXPECT_LT(BumpActivation(10.0, 1.0), 1e-21);
  EXPECT_LT(BumpActivation(-10.0, 1.0), 1e-21);
}

TEST(Features, SaturatedAtCentre) {
  OneClassClassifier clf(Identity(5), DiagonalHead(5, 0.0, 0.0));
  const Tensor x({5}, {0.1, 0.2, 0.3, 0.4, 0.5});
  for (double f : clf.Features(x)) EXPECT_DOUBLE_EQ(f, 1.0);
  EXPECT_DOUBLE_EQ(clf.Output(x), 1.0);
  EXPECT_DOUBLE_EQ(clf.Score(x), 1.0);
}

TEST(Features, RangeAndDeterminismFuzz) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto clf = OneClassClassifier::Initialize(Identity(6), rng());
    std::normal_distribution<double> g(0.0, 3.0);
    Tensor x({6});
    for (double& v : x.data) v = g(rng);  // encoder inputs need not lie in [0,1]
    const auto f = clf.Features(x);
    for (double v : f) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    const double c = clf.Score(x);
    EXPECT_GT(c, -1.0);
    EXPECT_LE(c, 1.0);
    EXPECT_EQ(f, clf.Features(x));
  }
}

TEST(Score, HalfOutputAtLn2Distance) {
  // One feature: need (1 - f)^2 = 2 s^2 ln 2. With s = 0.5, f = 1 - sqrt(ln2 / 2).
  const double s = 0.5;
  const double f = 1.0 - std::sqrt(2 * s * s * std::log(2.0));
  const double z = std::sqrt(-2.0 * std::log(f));
  OneClassClassifier clf(Identity(1), DiagonalHead(1, 0.0, z, s));
  const Tensor x({1}, {0.3});
  EXPECT_NEAR(clf.Output(x), 0.5, 1e-12);
  EXPECT_NEAR(clf.Score(x), 0.0, 1e-12);
}

TEST(Score, FarFromCentreApproachesMinusOne) {
  // With s = 1 and r = 16, q approaches 8 as every feature leaves the centre.
  const Tensor x({16}, std::vector<double>(16, 0.5));
  double prev = 1.0;
  for (double b3 : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double c = OneClassClassifier(Identity(16), DiagonalHead(16, 0.0, b3)).Score(x);
    EXPECT_LT(c, prev);
    EXPECT_GT(c, -1.0);
    prev = c;
  }
  EXPECT_NEAR(prev, 2 * std::exp(-8.0) - 1, 1e-12);
}

TEST(Score, MonotoneInDistance) {
  std::mt19937_64 rng(11);
  const auto clf = OneClassClassifier::Initialize(Identity(4), 7);
  std::vector<Tensor> candidates;
  for (int i = 0; i < 64; ++i) candidates.push_back(RandomInput(4, rng));
  std::size_t by_score = 0, by_distance = 0;
  double best_score = -2, best_distance = 1e300;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto f = clf.Features(candidates[i]);
    double dist = 0;
    for (double v : f) dist += (v - 1) * (v - 1);
    const double c = clf.Score(candidates[i]);
    if (c > best_score) best_score = c, by_score = i;
    if (dist < best_distance) best_distance = dist, by_distance = i;
  }
  EXPECT_EQ(by_score, by_distance);
}

TEST(Loss, NegativeTargetMatchesDirectFormula) {
  for (double q : {0.01, 0.3, 1.0, 5.0}) {
    const double o = std::exp(-q);
    EXPECT_NEAR(BceFromDistance(q, Label::kNegative), -std::log(1 - o), 1e-12);
    EXPECT_NEAR(BceFromDistance(q, Label::kPositive), -std::log(o), 1e-12);
  }
  EXPECT_TRUE(std::isfinite(BceFromDistance(0.0, Label::kNegative)));
}

TEST(GradInput, MatchesFiniteDifferencesOnSyntheticTask) {
  SyntheticTaskSpec spec;
  spec.n_train = 10;
  spec.n_test = 2;
  spec.seed = 17;
  const auto data = MakeSyntheticTask(spec).train;
  std::mt19937_64 rng(5);
  const auto clf = OneClassClassifier::Initialize(Identity(20), 99);
  for (const auto& s : data) {
    for (Label target : {Label::kPositive, Label::kNegative}) {
      const Tensor g = GradInput(clf, s.x, target);
      ASSERT_EQ(g.shape, s.x.shape);
      auto loss = [&](const Tensor& x) {
        std::vector<double> scratch;
        return clf.LossAndInputGradient(x, target, scratch);
      };
      for (int k = 0; k < 10; ++k) {
        const std::size_t i = rng() % 20;
        const double fd_coarse = CentralDifference(loss, s.x, i, 1e-3);
        EXPECT_LE(std::abs(g.data[i] - fd_coarse), 1e-4);
        const double fd = CentralDifference(loss, s.x, i, 1e-6);
        EXPECT_LE(std::abs(g.data[i] - fd), 1e-4 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(GradInput, ZeroAtInteriorOptimum) {
  // z = x - 0.5 on the diagonal head; L(+1) = q is minimized at x = 0.5.
  OneClassClassifier clf(Identity(3), DiagonalHead(3, 1.0, -0.5));
  const Tensor g = GradInput(clf, Tensor({3}, {0.5, 0.5, 0.5}), Label::kPositive);
  EXPECT_LE(NormOf(g.data, Norm::kL2), 1e-8);
}

TEST(GradInput, ZeroForConstantScore) {
  OneClassClassifier clf(Identity(4), DiagonalHead(4, 0.0, 0.3));
  for (Label y : {Label::kPositive, Label::kNegative}) {
    for (double v : GradInput(clf, Tensor({4}, {0.2, 0.4, 0.6, 0.8}), y).data) {
      EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(ParamGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(21);
  const auto base = OneClassClassifier::Initialize(Identity(5), 4);
  const Tensor x = RandomInput(5, rng);
  for (Label y : {Label::kPositive, Label::kNegative}) {
    HeadParams grad = HeadParams::Zeros(5);
    base.LossAndGradients(x, y, &grad, nullptr);
    HeadParams p = base.head();
    auto blocks = p.Blocks();
    auto gblocks = grad.Blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      for (std::size_t i = 0; i < blocks[b].size(); i += 3) {
        const double v0 = blocks[b][i];
        auto eval = [&](double v) {
          blocks[b][i] = v;
          OneClassClassifier c(base.encoder_ptr(), p);
          blocks[b][i] = v0;
          std::vector<double> scratch;
          return c.LossAndInputGradient(x, y, scratch);
        };
        const double h = 1e-6;
        const double fd = (eval(v0 + h) - eval(v0 - h)) / (2 * h);
        EXPECT_NEAR(gblocks[b][i], fd, 1e-5 * std::max(1.0, std::abs(fd)))
            << "block " << b << " index " << i;
      }
    }
  }
}

TEST(ConvEncoder, VjpMatchesFiniteDifferences) {
  const auto enc = MakeEncoder("conv", Shape{2, 5, 5}, {{"channels", 3}, {"seed", 8}});
  ASSERT_EQ(enc->output_dim(), 3u);
  std::mt19937_64 rng(2);
  Tensor x({2, 5, 5});
  std::uniform_real_distribution<double> u(0, 1);
  for (double& v : x.data) v = u(rng);
  const std::vector<double> w{0.3, -1.2, 0.7};
  const auto vjp = enc->Vjp(x, w);
  auto dot = [&](const Tensor& t) {
    const auto e = enc->Forward(t);
    return w[0] * e[0] + w[1] * e[1] + w[2] * e[2];
  };
  for (std::size_t i = 0; i < x.size(); i += 7) {
    EXPECT_NEAR(vjp[i], CentralDifference(dot, x, i, 1e-6), 1e-8);
  }
  EXPECT_THROW(enc->Forward(Tensor({2, 4, 4})), Error);
}

// ---------------------------------------------------------------------------
// Training

std::vector<LabeledSample> SeparableTask(std::uint64_t seed, int n = 600) {
  SyntheticTaskSpec spec;
  spec.n_train = n;
  spec.n_test = 2;
  spec.d = 10;
  spec.noise_sigma = 0.05;
  spec.robust_gap = 1.0;
  spec.seed = seed;
  return MakeSyntheticTask(spec).train;
}

double TrainingAp(const OneClassClassifier& clf, const std::vector<LabeledSample>& data) {
  std::vector<double> scores;
  std::vector<Label> labels;
  for (const auto& s : data) {
    scores.push_back(clf.Score(s.x));
    labels.push_back(s.y);
  }
  return AveragePrecision(scores, labels);
}

TEST(TrainConfig, Defaults) {
  const TrainConfig c;
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.epochs, 15);
  EXPECT_EQ(c.patience, 7);
  const TrainConfig parsed = nlohmann::json::object().get<TrainConfig>();
  EXPECT_EQ(parsed, c);
}

TEST(TrainHead, ZeroEpochsReturnsInitialParameters) {
  const auto data = SeparableTask(1, 64);
  const auto init = OneClassClassifier::Initialize(Identity(10), 3);
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainResult r = TrainHead(init, data, {}, cfg);
  EXPECT_EQ(r.classifier.head(), init.head());
  EXPECT_EQ(r.history.best_epoch, 0);
}

TEST(TrainHead, SeparableTaskReachesHighApLikeLogisticOracle) {
  const auto data = SeparableTask(2);
  // Independent reference: plain logistic regression separates this task.
  const auto w = testing::FitLogistic(data);
  std::vector<double> oracle_scores;
  std::vector<Label> labels;
  for (const auto& s : data) {
    oracle_scores.push_back(testing::LogisticScore(w, s.x));
    labels.push_back(s.y);
  }
  ASSERT_GE(AveragePrecision(oracle_scores, labels), 0.99);

  const auto init = OneClassClassifier::Initialize(Identity(10), 3);
  TrainConfig cfg;
  cfg.seed = 4;
  const TrainResult r = TrainHead(init, data, {}, cfg);
  EXPECT_LE(r.history.train_loss.size(), 15u);
  EXPECT_GE(TrainingAp(r.classifier, data), 0.99);
}

TEST(TrainHead, DeterministicAndEncoderFrozen) {
  const auto data = SeparableTask(3, 200);
  std::vector<LabeledSample> images;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 40; ++i) {
    Tensor x({1, 4, 4});
    for (double& v : x.data) v = u(rng) * (i % 2 ? 0.5 : 1.0);
    images.push_back({x, i % 2 ? Label::kNegative : Label::kPositive, "s", Split::kTrain});
  }
  const auto enc = MakeEncoder("conv", Shape{1, 4, 4}, {{"channels", 4}});
  const std::string digest = enc->Digest();
  const auto init = OneClassClassifier::Initialize(enc, 5);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 8;
  const TrainResult a = TrainHead(init, images, {}, cfg);
  const TrainResult b = TrainHead(init, images, {}, cfg);
  EXPECT_EQ(a.classifier.head(), b.classifier.head());
  EXPECT_EQ(enc->Digest(), digest);
  EXPECT_EQ(a.classifier.encoder().Digest(), digest);
  EXPECT_NE(a.classifier.head(), init.head());
}

TEST(TrainHead, Errors) {
  auto data = SeparableTask(4, 20);
  std::vector<LabeledSample> positives;
  for (const auto& s : data) {
    if (s.y == Label::kPositive) positives.push_back(s);
  }
  const auto init = OneClassClassifier::Initialize(Identity(10), 1);
  try {
    TrainHead(init, positives, {});
    FAIL() << "expected SingleClassTrainingSet";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSingleClassTrainingSet);
  }
  EXPECT_THROW(TrainHead(init, {}, {}), Error);
}

TEST(TrainHead, KeepsBestValidationEpoch) {
  const auto data = SeparableTask(6, 300);
  std::vector<LabeledSample> train(data.begin(), data.begin() + 240);
  std::vector<LabeledSample> val(data.begin() + 240, data.end());
  const auto init = OneClassClassifier::Initialize(Identity(10), 2);
  const TrainResult r = TrainHead(init, train, val, {});
  const auto& h = r.history;
  ASSERT_FALSE(h.val_loss.empty());
  const auto best = std::min_element(h.val_loss.begin(), h.val_loss.end());
  EXPECT_EQ(best - h.val_loss.begin(), h.best_epoch);
  EXPECT_NEAR(MeanLoss(r.classifier, val), *best, 1e-12);
}

TEST(Checkpoint, RoundTripAndTamperDetection) {
  testing::TempDir dir("ckpt");
  const auto clf = OneClassClassifier::Initialize(
      MakeEncoder("conv", Shape{1, 5, 5}, {{"channels", 2}, {"seed", 3}}), 12);
  SaveCheckpoint({clf, 12, TrainConfig{}}, dir / "m.json");
  const Checkpoint back = LoadCheckpoint(dir / "m.json");
  EXPECT_EQ(back.classifier.head(), clf.head());
  EXPECT_EQ(ModelHash(back.classifier), ModelHash(clf));
  EXPECT_EQ(back.seed, 12u);

  auto j = CheckpointToJson({clf, 12, TrainConfig{}});
  j["head"]["b1"][0] = 0.123;
  EXPECT_THROW(CheckpointFromJson(j), Error);
}

}  // namespace
}  // namespace nrfbench
