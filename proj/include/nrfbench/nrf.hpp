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

// Non-robust-feature datasets. Every sample gets a fresh uniformly random
// label and is attacked toward it on the source classifier, so the only
// label signal left is what the attack planted.

#ifndef NRFBENCH_NRF_HPP_
#define NRFBENCH_NRF_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nrfbench/attack.hpp"
#include "nrfbench/checkpoint.hpp"
#include "nrfbench/data.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/model.hpp"
#include "nrfbench/report.hpp"
#include "nrfbench/sample_io.hpp"

namespace nrfbench {

/// i.i.d. uniform +-1 labels.
inline std::vector<Label> AssignRandomLabels(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Label> out(n);
  for (auto& y : out) y = (rng() >> 63) ? Label::kPositive : Label::kNegative;
  return out;
}

struct NrfDataset {
  // x is the attacked input, y the random NRF label, subclass the source
  // subclass, split inherited from the source sample.
  std::vector<LabeledSample> samples;
  std::vector<std::size_t> original_index;  // into the source split
  std::vector<Tensor> deltas;               // in memory only
  std::string source_model_hash;
  ThreatModel tm;
  std::uint64_t seed = 0;
};

struct NrfSplits {
  NrfDataset train;
  NrfDataset test;
};

/// Builds the NRF train and test sets from the source splits. Labels for
/// train then test come from one stream seeded by `seed`; attacks use
/// per-sample streams derived from it.
template <LossModel Model>
NrfSplits GenerateNrfDataset(const Model& clf, const std::string& model_hash,
                             const std::vector<LabeledSample>& train,
                             const std::vector<LabeledSample>& test, const ThreatModel& tm,
                             std::uint64_t seed) {
  if (train.empty() && test.empty()) {
    throw Error(ErrorKind::kEmptyDataset, "no samples to build an NRF dataset from");
  }
  tm.Validate();
  const std::vector<Label> labels = AssignRandomLabels(train.size() + test.size(), seed);
  auto build = [&](const std::vector<LabeledSample>& src, std::size_t label_offset,
                   std::uint64_t attack_seed) {
    NrfDataset ds;
    ds.source_model_hash = model_hash;
    ds.tm = tm;
    ds.seed = seed;
    std::vector<Label> targets(labels.begin() + static_cast<long>(label_offset),
                               labels.begin() + static_cast<long>(label_offset + src.size()));
    auto results = AttackBatch(clf, src, AttackPolicy::kFree, tm, attack_seed, &targets);
    for (std::size_t i = 0; i < src.size(); ++i) {
      ds.samples.push_back({std::move(results[i].x_adv), targets[i], src[i].subclass,
                            src[i].split});
      ds.deltas.push_back(std::move(results[i].delta));
      ds.original_index.push_back(i);
    }
    return ds;
  };
  NrfSplits out;
  out.train = build(train, 0, MixSeed(seed, 1));
  out.test = build(test, train.size(), MixSeed(seed, 2));
  return out;
}

enum class NrfVerdict { kUseful, kNotUseful, kMixed };

inline const char* NrfVerdictName(NrfVerdict v) {
  switch (v) {
    case NrfVerdict::kUseful: return "useful";
    case NrfVerdict::kNotUseful: return "not-useful";
    case NrfVerdict::kMixed: return "mixed";
  }
  return "?";
}

/// useful: AP >= baseline + margin; not-useful: |AP - baseline| <= margin/2;
/// anything else is mixed.
inline NrfVerdict ClassifyNrfUsefulness(double ap, double baseline, double margin = 0.1) {
  if (ap >= baseline + margin) return NrfVerdict::kUseful;
  if (std::abs(ap - baseline) <= margin / 2) return NrfVerdict::kNotUseful;
  return NrfVerdict::kMixed;
}

/// Verdict on the overall row of an NRF-model report evaluated on NRF test
/// data.
inline NrfVerdict NrfUsefulnessProbe(const EvalReport& report, double baseline,
                                     double margin = 0.1) {
  if (!report.overall) throw Error(ErrorKind::kMissingMetric, "report has no overall AP");
  return ClassifyNrfUsefulness(report.overall->ap_mean, baseline, margin);
}

// ---------------------------------------------------------------------------
// Persistence: a data-module dataset directory plus nrf_meta.json.
//
//   <dir>/manifest.json            subclass table, path_glob "{split}/<name>.tsv"
//   <dir>/{train,test}/<name>.tsv  attacked samples, one per line
//   <dir>/nrf_meta.json            model hash, threat model, seed, and per
//                                  split the NRF labels and source indices in
//                                  file order

inline void WriteNrfDataset(const NrfSplits& nrf, const DatasetManifest& source,
                            const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "train", ec);
  fs::create_directories(dir / "test", ec);
  if (ec) throw Error(ErrorKind::kIoError, "cannot create " + dir.string());

  DatasetManifest m;
  m.subclasses = source.subclasses;
  m.source_uri = source.source_uri;
  m.provenance = source.provenance;
  m.provenance["nrf_source_model"] = nrf.train.source_model_hash;
  nlohmann::json meta{{"source_model_hash", nrf.train.source_model_hash},
                      {"tm", nrf.train.tm},
                      {"seed", nrf.train.seed},
                      {"split_policy", "inherited"}};
  Shape shape;
  for (const NrfDataset* ds : {&nrf.train, &nrf.test}) {
    const bool is_train = ds == &nrf.train;
    const std::string split = is_train ? "train" : "test";
    std::vector<int> labels;
    std::vector<std::size_t> index;
    for (auto& sub : m.subclasses) {
      std::vector<const Tensor*> rows;
      for (std::size_t i = 0; i < ds->samples.size(); ++i) {
        const auto& s = ds->samples[i];
        if (s.subclass != sub.name) continue;
        rows.push_back(&s.x);
        labels.push_back(Sign(s.y));
        index.push_back(ds->original_index[i]);
        if (shape.empty()) shape = s.x.shape;
      }
      (is_train ? sub.train_count : sub.test_count) = static_cast<int>(rows.size());
      sub.path_glob = "{split}/" + sub.name + ".tsv";
      if (!rows.empty()) WriteTsv(dir / split / (sub.name + ".tsv"), rows);
    }
    meta[split] = {{"labels", labels}, {"original_index", index}};
  }
  if (shape.size() > 1) m.resize = shape;
  WriteManifest(m, dir / "manifest.json");
  std::ofstream out(dir / "nrf_meta.json");
  if (!out) throw Error(ErrorKind::kIoError, "cannot write nrf_meta.json");
  out << meta.dump(1) << "\n";
}

inline NrfSplits ReadNrfDataset(const std::filesystem::path& dir) {
  const DatasetManifest m = LoadManifest(dir / "manifest.json");
  std::ifstream in(dir / "nrf_meta.json");
  if (!in) throw Error(ErrorKind::kMissingFile, (dir / "nrf_meta.json").string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("nrf_meta.json: ") + e.what());
  }
  NrfSplits out;
  for (Split split : {Split::kTrain, Split::kTest}) {
    NrfDataset& ds = split == Split::kTrain ? out.train : out.test;
    ds.source_model_hash = meta.at("source_model_hash").get<std::string>();
    ds.tm = meta.at("tm").get<ThreatModel>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    auto samples = LoadSamples(m, split);
    const auto& block = meta.at(SplitName(split));
    const auto labels = block.at("labels").get<std::vector<int>>();
    const auto index = block.at("original_index").get<std::vector<std::size_t>>();
    if (labels.size() != samples.size() || index.size() != samples.size()) {
      throw Error(ErrorKind::kCountMismatch, "nrf_meta.json disagrees with sample files");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return index[a] < index[b]; });
    for (std::size_t k : order) {
      samples[k].y = LabelFromInt(labels[k]);
      ds.samples.push_back(std::move(samples[k]));
      ds.original_index.push_back(index[k]);
    }
  }
  return out;
}

}  // namespace nrfbench

#endif  // NRFBENCH_NRF_HPP_
