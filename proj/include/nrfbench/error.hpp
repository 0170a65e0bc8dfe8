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

#ifndef NRFBENCH_ERROR_HPP_
#define NRFBENCH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace nrfbench {

enum class ErrorKind {
  // config / schema
  kParseError,
  kMissingPositiveClass,
  kDuplicateSubclass,
  kCountMismatch,
  kInvalidSpec,
  kInvalidConfig,
  kInvalidTarget,
  // data
  kMissingFile,
  kShapeMismatch,
  kEmptyDataset,
  kEmptyInput,
  kNoPositives,
  kSingleClassTrainingSet,
  kMissingMetric,
  kEmptyResults,
  kIoError,
  // numerics
  kNonFiniteLoss,
  kNonFiniteGradient,
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kMissingPositiveClass: return "MissingPositiveClass";
    case ErrorKind::kDuplicateSubclass: return "DuplicateSubclass";
    case ErrorKind::kCountMismatch: return "CountMismatch";
    case ErrorKind::kInvalidSpec: return "InvalidSpec";
    case ErrorKind::kInvalidConfig: return "InvalidConfig";
    case ErrorKind::kInvalidTarget: return "InvalidTarget";
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kNoPositives: return "NoPositives";
    case ErrorKind::kSingleClassTrainingSet: return "SingleClassTrainingSet";
    case ErrorKind::kMissingMetric: return "MissingMetric";
    case ErrorKind::kEmptyResults: return "EmptyResults";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
  }
  return "Unknown";
}

/// Coarse error category; the CLI maps these onto its exit codes.
enum class ErrorCategory { kConfig, kData, kNumerical };

inline ErrorCategory CategoryOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParseError:
    case ErrorKind::kMissingPositiveClass:
    case ErrorKind::kDuplicateSubclass:
    case ErrorKind::kCountMismatch:
    case ErrorKind::kInvalidSpec:
    case ErrorKind::kInvalidConfig:
    case ErrorKind::kInvalidTarget:
      return ErrorCategory::kConfig;
    case ErrorKind::kNonFiniteLoss:
    case ErrorKind::kNonFiniteGradient:
      return ErrorCategory::kNumerical;
    default:
      return ErrorCategory::kData;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  ErrorCategory category() const { return CategoryOf(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace nrfbench

#endif  // NRFBENCH_ERROR_HPP_
