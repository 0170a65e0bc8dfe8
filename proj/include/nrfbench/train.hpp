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

#ifndef NRFBENCH_TRAIN_HPP_
#define NRFBENCH_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "json.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/model.hpp"
#include "nrfbench/tensor.hpp"

namespace nrfbench {

struct TrainConfig {
  double learning_rate = 0.001;
  int epochs = 15;
  int patience = 7;
  int batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;  // shuffling

  bool operator==(const TrainConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr", c.learning_rate},  {"epochs", c.epochs},
                     {"patience", c.patience}, {"batch_size", c.batch_size},
                     {"beta1", c.beta1},       {"beta2", c.beta2},
                     {"adam_epsilon", c.adam_epsilon}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.learning_rate = j.value("lr", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.patience = j.value("patience", c.patience);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.seed = j.value("seed", c.seed);
}

// Adam over a fixed list of parameter blocks.
class Adam {
 public:
  Adam(const TrainConfig& cfg, const std::vector<std::span<double>>& blocks)
      : cfg_(cfg) {
    for (const auto& b : blocks) {
      m_.emplace_back(b.size(), 0.0);
      v_.emplace_back(b.size(), 0.0);
    }
  }

  void Step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<double>>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t b = 0; b < params.size(); ++b) {
      auto& m = m_[b];
      auto& v = v_[b];
      for (std::size_t i = 0; i < params[b].size(); ++i) {
        const double g = grads[b][i];
        m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
        v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
        params[b][i] -= cfg_.learning_rate * (m[i] / c1) /
                        (std::sqrt(v[i] / c2) + cfg_.adam_epsilon);
      }
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch, mean over minibatches
  std::vector<double> val_loss;    // index 0 is the initial model
  int best_epoch = 0;              // 0 = initial parameters
  bool stopped_early = false;
};

struct TrainResult {
  OneClassClassifier classifier;
  TrainHistory history;
};

/// Mean BCE over a sample set.
inline double MeanLoss(const OneClassClassifier& clf, const std::vector<LabeledSample>& data) {
  if (data.empty()) return 0.0;
  double acc = 0;
  for (const auto& s : data) acc += BceFromDistance(clf.Forward(s.x).q, s.y);
  return acc / static_cast<double>(data.size());
}

/// Trains the head with minibatch Adam on BCE, keeping the parameters with
/// the lowest validation loss (training loss if `val` is empty). Stops after
/// `patience` epochs without improvement. The encoder is never modified.
inline TrainResult TrainHead(const OneClassClassifier& init,
                             const std::vector<LabeledSample>& train,
                             const std::vector<LabeledSample>& val,
                             const TrainConfig& cfg = {}) {
  if (train.empty()) throw Error(ErrorKind::kEmptyDataset, "empty training set");
  const bool has_pos = std::any_of(train.begin(), train.end(),
                                   [](const auto& s) { return s.y == Label::kPositive; });
  const bool has_neg = std::any_of(train.begin(), train.end(),
                                   [](const auto& s) { return s.y == Label::kNegative; });
  if (!has_pos || !has_neg) {
    throw Error(ErrorKind::kSingleClassTrainingSet, "training set needs both labels");
  }
  if (cfg.batch_size <= 0 || cfg.epochs < 0 || cfg.patience < 1 ||
      !(cfg.learning_rate > 0)) {
    throw Error(ErrorKind::kInvalidConfig, "bad training configuration");
  }

  const auto& monitor = val.empty() ? train : val;
  OneClassClassifier clf = init;
  TrainResult result{init, {}};
  double best = MeanLoss(clf, monitor);
  result.history.val_loss.push_back(best);

  HeadParams& params = clf.mutable_head();
  Adam adam(cfg, params.Blocks());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      HeadParams grad = HeadParams::Zeros(params.r);
      double batch_loss = 0;
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = train[order[k]];
        batch_loss += clf.LossAndGradients(s.x, s.y, &grad, nullptr);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      batch_loss *= inv;
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::kNonFiniteLoss,
                    "loss became non-finite in epoch " + std::to_string(epoch));
      }
      auto grad_blocks = grad.Blocks();
      for (auto& b : grad_blocks) {
        for (auto& g : b) g *= inv;
      }
      adam.Step(params.Blocks(), grad_blocks);
      params.sigma_bump = std::max(params.sigma_bump, kMinPositiveParam);
      params.rbf_scale = std::max(params.rbf_scale, kMinPositiveParam);
      epoch_loss += batch_loss;
      ++batches;
    }
    result.history.train_loss.push_back(epoch_loss / static_cast<double>(batches));

    const double v = MeanLoss(clf, monitor);
    if (!std::isfinite(v)) throw Error(ErrorKind::kNonFiniteLoss, "validation loss");
    result.history.val_loss.push_back(v);
    if (v < best) {
      best = v;
      result.classifier = clf;
      result.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      result.history.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  return result;
}

}  // namespace nrfbench

#endif  // NRFBENCH_TRAIN_HPP_
