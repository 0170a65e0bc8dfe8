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

// Planted-feature synthetic task. Samples live in [0,1]^d around the centre
// 0.5; the class is carried by a robust direction (large separation) and a
// non-robust direction (small amplitude, label-correlated sign).

#ifndef NRFBENCH_SYNTHETIC_HPP_
#define NRFBENCH_SYNTHETIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/tensor.hpp"

namespace nrfbench {

inline constexpr const char* kSyntheticPositive = "positive";
inline constexpr const char* kSyntheticNegative = "negative";

struct SyntheticTaskSpec {
  int n_train = 2000;
  int n_test = 1000;
  int d = 20;
  std::vector<double> robust_dir;  // empty = default (first axis)
  std::vector<double> nrf_dir;     // empty = default ((e1 - e2) / sqrt 2)
  double robust_gap = 1.0;
  double nrf_corr = 0.9;
  // Magnitude of the planted coordinate along nrf_dir before noise.
  double nrf_amplitude = 0.1;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;

  bool operator==(const SyntheticTaskSpec&) const = default;
};

inline std::vector<double> DefaultRobustDirection(int d) {
  std::vector<double> v(static_cast<std::size_t>(d), 0.0);
  v[0] = 1.0;
  return v;
}

inline std::vector<double> DefaultNrfDirection(int d) {
  std::vector<double> v(static_cast<std::size_t>(d), 0.0);
  v[1] = 1.0 / std::sqrt(2.0);
  v[2] = -1.0 / std::sqrt(2.0);
  return v;
}

/// Fills default directions and checks every invariant of the spec.
inline SyntheticTaskSpec ResolveSyntheticSpec(SyntheticTaskSpec spec) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::kInvalidSpec, "synthetic task: " + msg);
  };
  if (spec.n_train <= 0 || spec.n_test <= 0) fail("n_train and n_test must be > 0");
  if (spec.d < 3 && (spec.robust_dir.empty() || spec.nrf_dir.empty())) {
    fail("default directions need d >= 3");
  }
  if (spec.d < 2) fail("d must be >= 2");
  if (spec.robust_dir.empty()) spec.robust_dir = DefaultRobustDirection(spec.d);
  if (spec.nrf_dir.empty()) spec.nrf_dir = DefaultNrfDirection(spec.d);
  const auto d = static_cast<std::size_t>(spec.d);
  if (spec.robust_dir.size() != d || spec.nrf_dir.size() != d) {
    fail("direction length differs from d");
  }
  double rn = 0, nn = 0, dot = 0;
  for (std::size_t i = 0; i < d; ++i) {
    rn += spec.robust_dir[i] * spec.robust_dir[i];
    nn += spec.nrf_dir[i] * spec.nrf_dir[i];
    dot += spec.robust_dir[i] * spec.nrf_dir[i];
  }
  if (std::abs(rn - 1.0) > 1e-9 || std::abs(nn - 1.0) > 1e-9) {
    fail("directions must be unit vectors");
  }
  if (std::abs(dot) > 1e-9) fail("robust_dir and nrf_dir are not orthogonal");
  if (!(spec.robust_gap > 0)) fail("robust_gap must be > 0");
  if (!(spec.nrf_corr >= 0 && spec.nrf_corr <= 1)) fail("nrf_corr must lie in [0,1]");
  if (!(spec.noise_sigma >= 0)) fail("noise_sigma must be >= 0");
  if (!(spec.nrf_amplitude >= 0)) fail("nrf_amplitude must be >= 0");
  return spec;
}

struct SyntheticTask {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

namespace detail {

inline std::vector<LabeledSample> GenerateSplit(const SyntheticTaskSpec& spec,
                                                int n, Split split,
                                                std::mt19937_64& rng) {
  const auto d = static_cast<std::size_t>(spec.d);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double agree = 0.5 * (1.0 + spec.nrf_corr);

  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(n));
  std::vector<double> noise(d);
  for (int i = 0; i < n; ++i) {
    const Label y = (i % 2 == 0) ? Label::kPositive : Label::kNegative;
    const double ys = Sign(y);
    const double planted_sign = unit(rng) < agree ? ys : -ys;
    // Isotropic noise with its nrf_dir component removed; the planted
    // coordinate carries a folded noise term so its sign is exact.
    double along = 0;
    for (std::size_t k = 0; k < d; ++k) {
      noise[k] = spec.noise_sigma * gauss(rng);
      along += noise[k] * spec.nrf_dir[k];
    }
    const double b =
        planted_sign * (spec.nrf_amplitude + spec.noise_sigma * std::abs(gauss(rng)));
    Tensor x({d});
    for (std::size_t k = 0; k < d; ++k) {
      const double v = 0.5 + 0.5 * spec.robust_gap * ys * spec.robust_dir[k] +
                       b * spec.nrf_dir[k] + noise[k] - along * spec.nrf_dir[k];
      x.data[k] = std::clamp(v, 0.0, 1.0);
    }
    out.push_back({std::move(x), y,
                   y == Label::kPositive ? kSyntheticPositive : kSyntheticNegative,
                   split});
  }
  return out;
}

}  // namespace detail

/// Labels alternate +1/-1 so the class counts differ by at most one.
inline SyntheticTask MakeSyntheticTask(const SyntheticTaskSpec& raw) {
  const SyntheticTaskSpec spec = ResolveSyntheticSpec(raw);
  std::mt19937_64 rng(spec.seed);
  SyntheticTask task;
  task.train = detail::GenerateSplit(spec, spec.n_train, Split::kTrain, rng);
  task.test = detail::GenerateSplit(spec, spec.n_test, Split::kTest, rng);
  return task;
}

/// Empirical E[sign(nrf_dir . (x - 0.5)) * y]. The 0.5 centring makes the
/// statistic independent of the pixel offset.
inline double PlantedCorrelation(const std::vector<LabeledSample>& samples,
                                 const std::vector<double>& nrf_dir) {
  if (samples.empty()) throw Error(ErrorKind::kEmptyInput, "no samples");
  double acc = 0;
  for (const auto& s : samples) {
    double t = 0;
    for (std::size_t k = 0; k < nrf_dir.size(); ++k) {
      t += nrf_dir[k] * (s.x.data[k] - 0.5);
    }
    const double sgn = t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0);
    acc += sgn * Sign(s.y);
  }
  return acc / static_cast<double>(samples.size());
}

inline void to_json(nlohmann::json& j, const SyntheticTaskSpec& s) {
  j = nlohmann::json{{"n_train", s.n_train},         {"n_test", s.n_test},
                     {"d", s.d},                     {"robust_gap", s.robust_gap},
                     {"nrf_corr", s.nrf_corr},       {"nrf_amplitude", s.nrf_amplitude},
                     {"noise_sigma", s.noise_sigma}, {"seed", s.seed}};
  if (!s.robust_dir.empty()) j["robust_dir"] = s.robust_dir;
  if (!s.nrf_dir.empty()) j["nrf_dir"] = s.nrf_dir;
}

inline void from_json(const nlohmann::json& j, SyntheticTaskSpec& s) {
  s = SyntheticTaskSpec{};
  s.n_train = j.value("n_train", s.n_train);
  s.n_test = j.value("n_test", s.n_test);
  s.d = j.value("d", s.d);
  s.robust_gap = j.value("robust_gap", s.robust_gap);
  s.nrf_corr = j.value("nrf_corr", s.nrf_corr);
  s.nrf_amplitude = j.value("nrf_amplitude", s.nrf_amplitude);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.seed = j.value("seed", s.seed);
  if (j.contains("robust_dir")) s.robust_dir = j["robust_dir"].get<std::vector<double>>();
  if (j.contains("nrf_dir")) s.nrf_dir = j["nrf_dir"].get<std::vector<double>>();
}

}  // namespace nrfbench

#endif  // NRFBENCH_SYNTHETIC_HPP_
