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

#ifndef NRFBENCH_TENSOR_HPP_
#define NRFBENCH_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nrfbench/error.hpp"

namespace nrfbench {

using Shape = std::vector<std::size_t>;

inline std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string ShapeToString(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

// Dense row-major tensor of doubles. Shape is (C,H,W) for images or (d,) for
// flat vectors.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(NumElements(shape)) {}
  Tensor(Shape s, std::vector<double> values)
      : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != NumElements(shape)) {
      throw Error(ErrorKind::kShapeMismatch,
                  "tensor of shape " + ShapeToString(shape) + " given " +
                      std::to_string(data.size()) + " values");
    }
  }
  static Tensor Vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  std::size_t size() const { return data.size(); }
  std::span<const double> view() const { return data; }
  std::span<double> view() { return data; }

  bool operator==(const Tensor&) const = default;
};

/// Class label; the positive (normal) class is always +1.
enum class Label : int { kNegative = -1, kPositive = +1 };

inline int Sign(Label y) { return static_cast<int>(y); }
inline double TargetProbability(Label y) {
  return y == Label::kPositive ? 1.0 : 0.0;
}
inline Label LabelFromInt(int v) {
  if (v != 1 && v != -1) {
    throw Error(ErrorKind::kInvalidTarget,
                "label must be +1 or -1, got " + std::to_string(v));
  }
  return v > 0 ? Label::kPositive : Label::kNegative;
}

enum class Split { kTrain, kTest };

inline const char* SplitName(Split s) {
  return s == Split::kTrain ? "train" : "test";
}

struct LabeledSample {
  Tensor x;
  Label y = Label::kNegative;
  std::string subclass;
  Split split = Split::kTrain;

  bool operator==(const LabeledSample&) const = default;
};

/// Throws unless every entry of x lies in [0,1] and subclass is non-empty.
inline void ValidateSample(const LabeledSample& s) {
  if (s.subclass.empty()) {
    throw Error(ErrorKind::kInvalidSpec, "sample has an empty subclass tag");
  }
  for (double v : s.x.data) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::kShapeMismatch,
                  "sample value " + std::to_string(v) + " outside [0,1]");
    }
  }
}

// SplitMix64 finalizer; used to derive independent per-item seeds from a base
// seed so results do not depend on evaluation order.
inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace nrfbench

#endif  // NRFBENCH_TENSOR_HPP_
