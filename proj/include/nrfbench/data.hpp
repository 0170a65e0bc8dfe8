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

#ifndef NRFBENCH_DATA_HPP_
#define NRFBENCH_DATA_HPP_

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/sample_io.hpp"
#include "nrfbench/synthetic.hpp"
#include "nrfbench/tensor.hpp"

namespace nrfbench {

enum class Role { kPositive, kNegative };
enum class Similarity { kSimilar, kDifferent };

/// Position of a negative subclass on the seen/semantics/imagery grid,
/// in roughly increasing distance from the training anomalies.
enum class DriftLevel {
  kSeen,
  kUnseenNear,
  kUnseenSemantic,
  kUnseenImagery,
  kUnseenBoth,
};

inline const char* DriftLevelName(DriftLevel level) {
  switch (level) {
    case DriftLevel::kSeen: return "seen";
    case DriftLevel::kUnseenNear: return "unseen-near";
    case DriftLevel::kUnseenSemantic: return "unseen-semantic";
    case DriftLevel::kUnseenImagery: return "unseen-imagery";
    case DriftLevel::kUnseenBoth: return "unseen-both";
  }
  return "?";
}

struct SubclassSpec {
  std::string name;
  Role role = Role::kNegative;
  Similarity semantics = Similarity::kSimilar;
  Similarity imagery = Similarity::kSimilar;
  int train_count = 0;
  int test_count = 0;
  // Shell glob relative to the manifest directory. "{split}" expands to
  // "train"/"test"; without it, matches hold train samples then test samples.
  std::string path_glob;

  bool seen() const { return train_count > 0; }
  int count(Split s) const { return s == Split::kTrain ? train_count : test_count; }

  bool operator==(const SubclassSpec&) const = default;
};

struct DatasetManifest {
  std::vector<SubclassSpec> subclasses;
  std::string source_uri;
  nlohmann::json provenance = nlohmann::json::object();
  Shape resize;  // empty: samples must already agree in shape
  std::optional<SyntheticTaskSpec> synthetic;
  std::filesystem::path base_dir;  // not serialized

  const SubclassSpec& positive() const {
    for (const auto& s : subclasses) {
      if (s.role == Role::kPositive) return s;
    }
    throw Error(ErrorKind::kMissingPositiveClass, "manifest has no positive subclass");
  }
  const SubclassSpec* find(const std::string& name) const {
    for (const auto& s : subclasses) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  bool operator==(const DatasetManifest& o) const {
    return subclasses == o.subclasses && source_uri == o.source_uri &&
           provenance == o.provenance && resize == o.resize &&
           synthetic == o.synthetic;
  }
};

inline DriftLevel TagDrift(const SubclassSpec& spec) {
  if (spec.seen()) return DriftLevel::kSeen;
  const bool sem = spec.semantics == Similarity::kDifferent;
  const bool img = spec.imagery == Similarity::kDifferent;
  if (sem && img) return DriftLevel::kUnseenBoth;
  if (sem) return DriftLevel::kUnseenSemantic;
  if (img) return DriftLevel::kUnseenImagery;
  return DriftLevel::kUnseenNear;
}

/// Subclass table implied by a synthetic task: one positive and one seen
/// negative subclass.
inline std::vector<SubclassSpec> SyntheticSubclasses(const SyntheticTaskSpec& spec) {
  const int train_pos = (spec.n_train + 1) / 2, test_pos = (spec.n_test + 1) / 2;
  return {
      {kSyntheticPositive, Role::kPositive, Similarity::kSimilar, Similarity::kSimilar,
       train_pos, test_pos, ""},
      {kSyntheticNegative, Role::kNegative, Similarity::kSimilar, Similarity::kSimilar,
       spec.n_train - train_pos, spec.n_test - test_pos, ""},
  };
}

/// Checks the manifest invariants; throws the matching ErrorKind.
inline void ValidateManifest(const DatasetManifest& m) {
  std::set<std::string> names;
  int positives = 0;
  bool trained_negative = false;
  for (const auto& s : m.subclasses) {
    if (s.name.empty()) throw Error(ErrorKind::kParseError, "subclass without a name");
    if (!names.insert(s.name).second) {
      throw Error(ErrorKind::kDuplicateSubclass, s.name);
    }
    if (s.train_count < 0 || s.test_count < 0) {
      throw Error(ErrorKind::kCountMismatch, s.name + ": negative sample count");
    }
    if (s.role == Role::kPositive) ++positives;
    if (s.role == Role::kNegative && s.train_count > 0) trained_negative = true;
  }
  if (positives == 0) throw Error(ErrorKind::kMissingPositiveClass, "no role=positive subclass");
  if (positives > 1) {
    throw Error(ErrorKind::kParseError, "more than one role=positive subclass");
  }
  if (!trained_negative) {
    throw Error(ErrorKind::kCountMismatch,
                "at least one negative subclass needs train_count > 0");
  }
  if (m.synthetic && m.subclasses != SyntheticSubclasses(*m.synthetic)) {
    throw Error(ErrorKind::kCountMismatch,
                "subclass table disagrees with the synthetic task");
  }
}

namespace detail {

inline Similarity ParseSimilarity(const nlohmann::json& j, const char* key) {
  const std::string v = j.value(key, std::string("similar"));
  if (v == "similar") return Similarity::kSimilar;
  if (v == "different") return Similarity::kDifferent;
  throw Error(ErrorKind::kParseError, std::string(key) + " must be similar|different");
}

inline const char* SimilarityName(Similarity s) {
  return s == Similarity::kSimilar ? "similar" : "different";
}

}  // namespace detail

inline DatasetManifest ParseManifest(const nlohmann::json& j,
                                     const std::filesystem::path& base_dir = {}) {
  DatasetManifest m;
  m.base_dir = base_dir;
  try {
    if (!j.is_object()) throw Error(ErrorKind::kParseError, "manifest must be an object");
    if (j.contains("synthetic")) {
      m.synthetic = ResolveSyntheticSpec(j["synthetic"].get<SyntheticTaskSpec>());
    }
    if (j.contains("subclasses")) {
      for (const auto& e : j.at("subclasses")) {
        SubclassSpec s;
        s.name = e.at("name").get<std::string>();
        const std::string role = e.at("role").get<std::string>();
        if (role == "positive") s.role = Role::kPositive;
        else if (role == "negative") s.role = Role::kNegative;
        else throw Error(ErrorKind::kParseError, s.name + ": role must be positive|negative");
        s.semantics = detail::ParseSimilarity(e, "semantics");
        s.imagery = detail::ParseSimilarity(e, "imagery");
        s.train_count = e.at("train_count").get<int>();
        s.test_count = e.at("test_count").get<int>();
        s.path_glob = e.value("path_glob", std::string());
        if (e.contains("seen") && e["seen"].get<bool>() != s.seen()) {
          throw Error(ErrorKind::kCountMismatch,
                      s.name + ": 'seen' contradicts train_count");
        }
        m.subclasses.push_back(std::move(s));
      }
    } else if (m.synthetic) {
      m.subclasses = SyntheticSubclasses(*m.synthetic);
    } else {
      throw Error(ErrorKind::kParseError, "manifest needs 'subclasses' or 'synthetic'");
    }
    m.source_uri = j.value("source_uri", std::string());
    if (j.contains("provenance")) m.provenance = j["provenance"];
    if (j.contains("resize")) m.resize = j["resize"].get<Shape>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, e.what());
  }
  ValidateManifest(m);
  return m;
}

inline DatasetManifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, path.string() + ": " + e.what());
  }
  return ParseManifest(j, path.parent_path());
}

inline nlohmann::json ManifestToJson(const DatasetManifest& m) {
  nlohmann::json j;
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : m.subclasses) {
    nlohmann::json e{{"name", s.name},
                     {"role", s.role == Role::kPositive ? "positive" : "negative"},
                     {"semantics", detail::SimilarityName(s.semantics)},
                     {"imagery", detail::SimilarityName(s.imagery)},
                     {"train_count", s.train_count},
                     {"test_count", s.test_count}};
    if (!s.path_glob.empty()) e["path_glob"] = s.path_glob;
    subs.push_back(std::move(e));
  }
  j["subclasses"] = std::move(subs);
  if (!m.resize.empty()) j["resize"] = m.resize;
  j["provenance"] = m.provenance;
  if (!m.source_uri.empty()) j["source_uri"] = m.source_uri;
  if (m.synthetic) j["synthetic"] = *m.synthetic;
  return j;
}

inline void WriteManifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIoError, "cannot write " + path.string());
  out << ManifestToJson(m).dump(2) << "\n";
}

namespace detail {

inline std::string ExpandSplit(std::string pattern, Split split) {
  const std::string key = "{split}";
  for (auto pos = pattern.find(key); pos != std::string::npos; pos = pattern.find(key)) {
    pattern.replace(pos, key.size(), SplitName(split));
  }
  return pattern;
}

}  // namespace detail

/// Materializes one split. Positive subclass maps to +1, every other to -1.
/// An empty `only_subclass` loads all subclasses in manifest order.
inline std::vector<LabeledSample> LoadSamples(const DatasetManifest& m, Split split,
                                              const std::string& only_subclass = {}) {
  if (!only_subclass.empty() && m.find(only_subclass) == nullptr) {
    throw Error(ErrorKind::kInvalidConfig, "unknown subclass " + only_subclass);
  }
  std::vector<LabeledSample> out;
  if (m.synthetic) {
    SyntheticTask task = MakeSyntheticTask(*m.synthetic);
    for (auto& s : split == Split::kTrain ? task.train : task.test) {
      if (only_subclass.empty() || s.subclass == only_subclass) {
        s.x = ResizeTo(s.x, m.resize);
        out.push_back(std::move(s));
      }
    }
    return out;
  }

  const std::string positive = m.positive().name;
  std::optional<Shape> shape;
  if (!m.resize.empty()) shape = m.resize;
  for (const auto& sub : m.subclasses) {
    if (!only_subclass.empty() && sub.name != only_subclass) continue;
    const int want = sub.count(split);
    if (want == 0) continue;
    if (sub.path_glob.empty()) {
      throw Error(ErrorKind::kMissingFile, sub.name + ": no path_glob");
    }
    const bool per_split = sub.path_glob.find("{split}") != std::string::npos;
    const std::string pattern =
        (m.base_dir / detail::ExpandSplit(sub.path_glob, split)).string();
    const auto files = Glob(pattern);
    if (files.empty()) throw Error(ErrorKind::kMissingFile, "no files match " + pattern);

    std::vector<Tensor> tensors;
    for (const auto& f : files) {
      for (auto& t : ReadSampleFile(f)) tensors.push_back(std::move(t));
    }
    std::size_t begin = 0;
    const std::size_t expected =
        per_split ? static_cast<std::size_t>(want)
                  : static_cast<std::size_t>(sub.train_count + sub.test_count);
    if (tensors.size() != expected) {
      throw Error(ErrorKind::kCountMismatch,
                  sub.name + ": manifest lists " + std::to_string(expected) +
                      " samples, found " + std::to_string(tensors.size()));
    }
    if (!per_split && split == Split::kTest) begin = static_cast<std::size_t>(sub.train_count);

    for (std::size_t i = begin; i < begin + static_cast<std::size_t>(want); ++i) {
      Tensor x = ResizeTo(tensors[i], m.resize);
      if (!shape) shape = x.shape;
      if (x.shape != *shape) {
        throw Error(ErrorKind::kShapeMismatch,
                    sub.name + ": sample shape " + ShapeToString(x.shape) +
                        " differs from " + ShapeToString(*shape));
      }
      out.push_back({std::move(x),
                     sub.name == positive ? Label::kPositive : Label::kNegative,
                     sub.name, split});
    }
  }
  return out;
}

}  // namespace nrfbench

#endif  // NRFBENCH_DATA_HPP_
