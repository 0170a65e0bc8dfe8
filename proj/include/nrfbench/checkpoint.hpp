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

#ifndef NRFBENCH_CHECKPOINT_HPP_
#define NRFBENCH_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "nrfbench/digest.hpp"
#include "nrfbench/encoder.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/model.hpp"
#include "nrfbench/train.hpp"

namespace nrfbench {

/// Content hash of a classifier (encoder digest plus every head value).
inline std::string ModelHash(const OneClassClassifier& clf) {
  Sha256 h;
  h.update(clf.encoder().Digest());
  HeadParams head = clf.head();
  for (const auto& block : head.Blocks()) h.update(std::span<const double>(block));
  return h.hex();
}

struct Checkpoint {
  OneClassClassifier classifier;
  std::uint64_t seed = 0;
  TrainConfig train_config;
};

inline nlohmann::json CheckpointToJson(const Checkpoint& c) {
  const HeadParams& p = c.classifier.head();
  return {
      {"format", "nrfbench-checkpoint-1"},
      {"encoder", c.classifier.encoder().Descriptor()},
      {"encoder_hash", c.classifier.encoder().Digest()},
      {"head",
       {{"r", p.r},
        {"w1", p.w1},
        {"b1", p.b1},
        {"w2", p.w2},
        {"b2", p.b2},
        {"w3", p.w3},
        {"b3", p.b3},
        {"sigma_bump", p.sigma_bump},
        {"rbf_scale", p.rbf_scale}}},
      {"seed", c.seed},
      {"train_config", c.train_config},
      {"model_hash", ModelHash(c.classifier)},
  };
}

inline Checkpoint CheckpointFromJson(const nlohmann::json& j) {
  try {
    auto encoder = MakeEncoder(j.at("encoder"));
    if (encoder->Digest() != j.at("encoder_hash").get<std::string>()) {
      throw Error(ErrorKind::kParseError, "checkpoint encoder hash mismatch");
    }
    const auto& h = j.at("head");
    HeadParams p;
    p.r = h.at("r").get<std::size_t>();
    p.w1 = h.at("w1").get<std::vector<double>>();
    p.b1 = h.at("b1").get<std::vector<double>>();
    p.w2 = h.at("w2").get<std::vector<double>>();
    p.b2 = h.at("b2").get<std::vector<double>>();
    p.w3 = h.at("w3").get<std::vector<double>>();
    p.b3 = h.at("b3").get<std::vector<double>>();
    p.sigma_bump = h.at("sigma_bump").get<double>();
    p.rbf_scale = h.at("rbf_scale").get<double>();
    Checkpoint c{OneClassClassifier(std::move(encoder), std::move(p)),
                 j.at("seed").get<std::uint64_t>(),
                 j.at("train_config").get<TrainConfig>()};
    if (j.contains("model_hash") &&
        ModelHash(c.classifier) != j["model_hash"].get<std::string>()) {
      throw Error(ErrorKind::kParseError, "checkpoint model hash mismatch");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("checkpoint: ") + e.what());
  }
}

inline void SaveCheckpoint(const Checkpoint& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  out << CheckpointToJson(c).dump() << "\n";
  if (!out) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

inline Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
  }
  return CheckpointFromJson(j);
}

}  // namespace nrfbench

#endif  // NRFBENCH_CHECKPOINT_HPP_
