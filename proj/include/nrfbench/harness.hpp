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

// Experiment configuration and the in-memory experiment loop:
//   standard   train one classifier per seed, evaluate on clean test data
//   robust     one-class attacks on test data, rescored
//   nrf        NRF datasets per threat model, NRF models, evaluated on NRF
//              test data and on the original test data
// Persistence and resumability live in experiment.hpp.

#ifndef NRFBENCH_HARNESS_HPP_
#define NRFBENCH_HARNESS_HPP_

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nrfbench/attack.hpp"
#include "nrfbench/checkpoint.hpp"
#include "nrfbench/data.hpp"
#include "nrfbench/encoder.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/metrics.hpp"
#include "nrfbench/model.hpp"
#include "nrfbench/nrf.hpp"
#include "nrfbench/report.hpp"
#include "nrfbench/train.hpp"

namespace nrfbench {

struct ExperimentConfig {
  DatasetManifest manifest;
  std::string manifest_path;  // empty for inline synthetic tasks
  std::string encoder = "identity";
  nlohmann::json encoder_options = nlohmann::json::object();
  TrainConfig train;
  double val_fraction = 0.1;
  std::map<std::string, ThreatModel> threat_models;
  std::vector<std::string> eval_tms;  // names used by the robust phase
  std::vector<std::string> nrf_tms;   // names used by the NRF phase
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::filesystem::path output_dir = "nrfbench_out";
  bool tpr_metrics = false;

  int n_runs() const { return static_cast<int>(seeds.size()); }

  const ThreatModel& tm(const std::string& name) const {
    auto it = threat_models.find(name);
    if (it == threat_models.end()) {
      throw Error(ErrorKind::kInvalidConfig, "unknown threat model '" + name + "'");
    }
    return it->second;
  }
};

/// Parses the experiment config. Relative paths resolve against `base_dir`.
inline ExperimentConfig ParseExperimentConfig(const nlohmann::json& j,
                                              const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  try {
    if (j.contains("manifest")) {
      c.manifest_path = j["manifest"].get<std::string>();
      c.manifest = LoadManifest(base_dir / c.manifest_path);
    } else if (j.contains("synthetic")) {
      c.manifest = ParseManifest(nlohmann::json{{"synthetic", j["synthetic"]}}, base_dir);
    } else {
      throw Error(ErrorKind::kInvalidConfig, "config needs 'manifest' or 'synthetic'");
    }
    if (j.contains("encoder")) {
      const auto& e = j["encoder"];
      if (e.is_string()) {
        c.encoder = e.get<std::string>();
      } else {
        c.encoder = e.at("name").get<std::string>();
        c.encoder_options = e;
      }
    }
    if (j.contains("train")) c.train = j["train"].get<TrainConfig>();
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    if (j.contains("threat_models")) {
      for (const auto& [name, tmj] : j["threat_models"].items()) {
        c.threat_models[name] = tmj.get<ThreatModel>();
      }
    }
    if (j.contains("eval")) c.eval_tms = j["eval"].get<std::vector<std::string>>();
    if (j.contains("nrf")) c.nrf_tms = j["nrf"].get<std::vector<std::string>>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("n_runs")) {
      const int n = j["n_runs"].get<int>();
      if (!j.contains("seeds")) {
        c.seeds.resize(static_cast<std::size_t>(std::max(n, 0)));
        std::iota(c.seeds.begin(), c.seeds.end(), std::uint64_t{0});
      }
      if (n != c.n_runs()) {
        throw Error(ErrorKind::kInvalidConfig, "n_runs must equal the number of seeds");
      }
    }
    if (j.contains("output_dir")) {
      const std::filesystem::path out = j["output_dir"].get<std::string>();
      c.output_dir = (out.is_absolute() ? out : base_dir / out).lexically_normal();
    }
    c.tpr_metrics = j.value("tpr_metrics", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, e.what());
  }
  if (c.seeds.empty()) throw Error(ErrorKind::kInvalidConfig, "at least one seed is required");
  if (!(c.val_fraction >= 0 && c.val_fraction < 1)) {
    throw Error(ErrorKind::kInvalidConfig, "val_fraction must lie in [0,1)");
  }
  for (const auto& n : c.eval_tms) c.tm(n);
  for (const auto& n : c.nrf_tms) c.tm(n);
  return c;
}

inline ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kInvalidConfig, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, path.string() + ": " + e.what());
  }
  return ParseExperimentConfig(j, path.parent_path());
}

/// NRFBENCH_SEED="7" or "1,2,3" replaces the seed list.
inline void ApplySeedOverride(ExperimentConfig& cfg, const char* env) {
  if (env == nullptr || *env == '\0') return;
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(env);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorKind::kInvalidConfig, "bad NRFBENCH_SEED value '" + tok + "'");
    }
  }
  if (seeds.empty()) throw Error(ErrorKind::kInvalidConfig, "empty NRFBENCH_SEED");
  cfg.seeds = std::move(seeds);
}

// ---------------------------------------------------------------------------
// Building blocks

struct DataSplits {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

inline DataSplits LoadData(const ExperimentConfig& cfg) {
  DataSplits d{LoadSamples(cfg.manifest, Split::kTrain), LoadSamples(cfg.manifest, Split::kTest)};
  if (d.train.empty()) throw Error(ErrorKind::kEmptyDataset, "training split is empty");
  return d;
}

inline std::shared_ptr<const Encoder> BuildEncoder(const ExperimentConfig& cfg,
                                                   const Shape& input_shape) {
  return MakeEncoder(cfg.encoder, input_shape, cfg.encoder_options);
}

/// Seeded holdout of `fraction` of the samples; both labels stay in `fit`.
inline std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> HoldOut(
    const std::vector<LabeledSample>& samples, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(fraction * static_cast<double>(samples.size()));
  std::vector<LabeledSample> fit, val;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_val ? val : fit).push_back(samples[order[k]]);
  }
  return {std::move(fit), std::move(val)};
}

// Seed streams derived from a run seed.
enum SeedStream : std::uint64_t {
  kInitStream = 1,
  kShuffleStream = 2,
  kHoldoutStream = 3,
  kAttackStream = 4,
  kNrfStream = 5,
  kNrfModelStream = 6,
};

/// Trains one classifier on `train` with the config's encoder and hyper-
/// parameters, all randomness drawn from `seed`.
inline TrainResult TrainClassifier(const ExperimentConfig& cfg,
                                   const std::vector<LabeledSample>& train,
                                   std::uint64_t seed) {
  if (train.empty()) throw Error(ErrorKind::kEmptyDataset, "training split is empty");
  auto encoder = BuildEncoder(cfg, train.front().x.shape);
  auto clf = OneClassClassifier::Initialize(encoder, MixSeed(seed, kInitStream));
  auto [fit, val] = HoldOut(train, cfg.val_fraction, MixSeed(seed, kHoldoutStream));
  TrainConfig tc = cfg.train;
  tc.seed = MixSeed(seed, kShuffleStream);
  return TrainHead(clf, fit, val, tc);
}

inline std::vector<double> ScoreSamples(const OneClassClassifier& clf,
                                        const std::vector<LabeledSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(clf.Score(s.x));
  return out;
}

inline RunEvaluation EvaluateSamples(const ExperimentConfig& cfg,
                                     const std::vector<double>& scores,
                                     const std::vector<LabeledSample>& samples) {
  std::vector<Label> labels;
  std::vector<std::string> groups;
  for (const auto& s : samples) {
    labels.push_back(s.y);
    groups.push_back(s.subclass);
  }
  return EvaluateRun(scores, labels, groups, cfg.manifest.positive().name,
                     EvalGroupsOf(cfg.manifest), cfg.tpr_metrics);
}

// ---------------------------------------------------------------------------
// Phases

struct StandardOutcome {
  std::vector<OneClassClassifier> models;  // one per seed
  std::vector<TrainHistory> histories;
  std::vector<RunEvaluation> runs;
  EvalReport report;
};

inline StandardOutcome RunStandard(const ExperimentConfig& cfg, const DataSplits& data) {
  StandardOutcome out;
  for (std::uint64_t seed : cfg.seeds) {
    TrainResult tr = TrainClassifier(cfg, data.train, seed);
    out.runs.push_back(EvaluateSamples(cfg, ScoreSamples(tr.classifier, data.test), data.test));
    out.models.push_back(std::move(tr.classifier));
    out.histories.push_back(std::move(tr.history));
  }
  out.report = AggregateReport(out.runs, EvalGroupsOf(cfg.manifest));
  return out;
}

struct RobustOutcome {
  std::vector<RunEvaluation> runs;
  EvalReport report;
  std::size_t attacks = 0;
  std::size_t infeasible = 0;  // results violating the ball or the [0,1] box
};

/// Attacks the test split of every run with the one-class policy and
/// rescores the attacked samples.
inline RunEvaluation RobustRun(const ExperimentConfig& cfg, const OneClassClassifier& model,
                               const std::vector<LabeledSample>& test, const ThreatModel& tm,
                               std::uint64_t seed, std::size_t* infeasible = nullptr) {
  const auto results =
      AttackBatch(model, test, AttackPolicy::kOneClass, tm, MixSeed(seed, kAttackStream));
  std::vector<double> scores;
  scores.reserve(results.size());
  for (const auto& r : results) {
    if (infeasible && !IsFeasible(r, tm)) ++*infeasible;
    scores.push_back(model.Score(r.x_adv));
  }
  return EvaluateSamples(cfg, scores, test);
}

inline RobustOutcome RunRobust(const ExperimentConfig& cfg,
                               const std::vector<OneClassClassifier>& models,
                               const DataSplits& data, const ThreatModel& tm) {
  if (models.size() != cfg.seeds.size()) {
    throw Error(ErrorKind::kInvalidConfig, "one model per seed is required");
  }
  RobustOutcome out;
  for (std::size_t k = 0; k < models.size(); ++k) {
    out.runs.push_back(
        RobustRun(cfg, models[k], data.test, tm, cfg.seeds[k], &out.infeasible));
    out.attacks += data.test.size();
  }
  out.report = AggregateReport(out.runs, EvalGroupsOf(cfg.manifest));
  return out;
}

/// NRF-model evaluation on NRF test data; samples keep their source subclass
/// as the group and carry NRF labels.
inline RunEvaluation EvaluateOnNrf(const ExperimentConfig& cfg, const OneClassClassifier& model,
                                   const NrfDataset& nrf_test) {
  return EvaluateSamples(cfg, ScoreSamples(model, nrf_test.samples), nrf_test.samples);
}

struct NrfRun {
  NrfSplits data;
  OneClassClassifier model;
  RunEvaluation on_nrf;
  RunEvaluation on_original;
};

/// NRF train/test sets for one run, attacking `source` with run-derived seeds.
inline NrfSplits MakeNrfSplits(const OneClassClassifier& source, const DataSplits& data,
                               const ThreatModel& tm, std::uint64_t seed) {
  return GenerateNrfDataset(source, ModelHash(source), data.train, data.test, tm,
                            MixSeed(seed, kNrfStream));
}

/// Trains the NRF model on `nrf.train` and evaluates it on NRF test data and
/// on the original test data.
inline NrfRun TrainNrfRun(const ExperimentConfig& cfg, NrfSplits nrf, const DataSplits& data,
                          std::uint64_t seed) {
  TrainResult tr = TrainClassifier(cfg, nrf.train.samples, MixSeed(seed, kNrfModelStream));
  RunEvaluation on_nrf = EvaluateOnNrf(cfg, tr.classifier, nrf.test);
  RunEvaluation on_orig =
      EvaluateSamples(cfg, ScoreSamples(tr.classifier, data.test), data.test);
  return {std::move(nrf), std::move(tr.classifier), std::move(on_nrf), std::move(on_orig)};
}

struct NrfOutcome {
  std::vector<NrfRun> runs;
  EvalReport on_nrf;
  EvalReport on_original;
  std::size_t attacks = 0;
  std::size_t infeasible = 0;
};

inline NrfOutcome RunNrf(const ExperimentConfig& cfg,
                         const std::vector<OneClassClassifier>& models, const DataSplits& data,
                         const ThreatModel& tm) {
  if (models.size() != cfg.seeds.size()) {
    throw Error(ErrorKind::kInvalidConfig, "one model per seed is required");
  }
  NrfOutcome out;
  std::vector<RunEvaluation> on_nrf, on_orig;
  for (std::size_t k = 0; k < models.size(); ++k) {
    NrfRun run = TrainNrfRun(cfg, MakeNrfSplits(models[k], data, tm, cfg.seeds[k]), data,
                             cfg.seeds[k]);
    for (const NrfDataset* ds : {&run.data.train, &run.data.test}) {
      for (std::size_t i = 0; i < ds->samples.size(); ++i) {
        const auto& x = ds->samples[i].x.data;
        const bool in_box = std::all_of(x.begin(), x.end(),
                                        [](double v) { return v >= 0.0 && v <= 1.0; });
        if (!in_box || NormOf(ds->deltas[i].data, tm.norm) > tm.epsilon + 1e-9) {
          ++out.infeasible;
        }
      }
      out.attacks += ds->samples.size();
    }
    on_nrf.push_back(run.on_nrf);
    on_orig.push_back(run.on_original);
    out.runs.push_back(std::move(run));
  }
  const auto groups = EvalGroupsOf(cfg.manifest);
  out.on_nrf = AggregateReport(on_nrf, groups);
  out.on_original = AggregateReport(on_orig, groups);
  return out;
}

}  // namespace nrfbench

#endif  // NRFBENCH_HARNESS_HPP_
