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

// Norm-ball threat models and projected gradient descent.
//
// The engine tracks the perturbation itself: each step moves delta against
// the normalized gradient, projects it onto the ball, then clamps it so that
// x + delta stays inside [0,1]. Because the box contains the origin, the
// clamp never increases the norm. The best iterate (lowest objective,
// including the unperturbed start) is returned.

#ifndef NRFBENCH_ATTACK_HPP_
#define NRFBENCH_ATTACK_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/tensor.hpp"

namespace nrfbench {

enum class Norm { kLinf, kL2 };

struct ThreatModel {
  Norm norm = Norm::kLinf;
  double epsilon = 0.0;
  double alpha = 0.1;
  int steps = 100;
  bool random_start = false;
  // Original textual form of epsilon ("4/255", "0.25"); used for file names.
  std::string epsilon_text;

  void Validate() const {
    if (!(epsilon >= 0) || !std::isfinite(epsilon)) {
      throw Error(ErrorKind::kInvalidConfig, "threat model epsilon must be >= 0");
    }
    if (!(alpha > 0)) throw Error(ErrorKind::kInvalidConfig, "threat model alpha must be > 0");
    if (steps < 1) throw Error(ErrorKind::kInvalidConfig, "threat model steps must be >= 1");
  }

  std::string EpsilonLabel() const {
    if (!epsilon_text.empty()) return epsilon_text;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", epsilon);
    return buf;
  }

  bool operator==(const ThreatModel& o) const {
    return norm == o.norm && epsilon == o.epsilon && alpha == o.alpha &&
           steps == o.steps && random_start == o.random_start;
  }
};

/// Parses "0.25", "4/255" or a JSON number.
inline double ParseEpsilon(const nlohmann::json& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) throw Error(ErrorKind::kParseError, "epsilon must be a number or string");
  const std::string s = v.get<std::string>();
  try {
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double out = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return out;
    }
    const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    const double a = std::stod(num, &used);
    if (used != num.size()) throw std::invalid_argument(s);
    const double b = std::stod(den, &used);
    if (used != den.size() || b == 0) throw std::invalid_argument(s);
    return a / b;
  } catch (const std::exception&) {
    throw Error(ErrorKind::kParseError, "bad epsilon '" + s + "'");
  }
}

inline void to_json(nlohmann::json& j, const ThreatModel& tm) {
  j = nlohmann::json{{"norm", tm.norm == Norm::kLinf ? "linf" : "l2"},
                     {"alpha", tm.alpha},
                     {"steps", tm.steps}};
  if (!tm.epsilon_text.empty()) {
    j["epsilon"] = tm.epsilon_text;
  } else {
    j["epsilon"] = tm.epsilon;
  }
  if (tm.random_start) j["random_start"] = true;
}

inline void from_json(const nlohmann::json& j, ThreatModel& tm) {
  tm = ThreatModel{};
  const std::string norm = j.value("norm", std::string("linf"));
  if (norm == "linf") tm.norm = Norm::kLinf;
  else if (norm == "l2") tm.norm = Norm::kL2;
  else throw Error(ErrorKind::kParseError, "norm must be linf or l2");
  if (!j.contains("epsilon")) throw Error(ErrorKind::kParseError, "threat model needs epsilon");
  tm.epsilon = ParseEpsilon(j["epsilon"]);
  if (j["epsilon"].is_string()) tm.epsilon_text = j["epsilon"].get<std::string>();
  tm.alpha = j.value("alpha", tm.alpha);
  tm.steps = j.value("steps", tm.steps);
  tm.random_start = j.value("random_start", false);
  tm.Validate();
}

inline double NormOf(std::span<const double> v, Norm norm) {
  double acc = 0;
  for (double x : v) acc = norm == Norm::kLinf ? std::max(acc, std::abs(x)) : acc + x * x;
  return norm == Norm::kLinf ? acc : std::sqrt(acc);
}

/// Euclidean projection onto the tm ball (clamp for linf, rescale for l2).
inline std::vector<double> Project(std::span<const double> delta, const ThreatModel& tm) {
  std::vector<double> out(delta.begin(), delta.end());
  if (tm.norm == Norm::kLinf) {
    for (double& v : out) v = std::clamp(v, -tm.epsilon, tm.epsilon);
  } else {
    const double n = NormOf(delta, Norm::kL2);
    if (n > tm.epsilon) {
      // Shrink the factor ulp by ulp until the rounded norm is within the
      // ball, so projecting again is an exact no-op.
      for (double k = tm.epsilon / n;; k = std::nextafter(k, 0.0)) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = delta[i] * k;
        if (NormOf(out, Norm::kL2) <= tm.epsilon) break;
      }
    }
  }
  return out;
}

enum class AttackMode { kTargeted, kUntargeted };

inline const char* AttackModeName(AttackMode m) {
  return m == AttackMode::kTargeted ? "targeted" : "untargeted";
}

struct AttackResult {
  Tensor x_adv;
  Tensor delta;
  std::vector<double> loss_trace;  // loss at steps 0..steps
  int best_step = 0;
  AttackMode mode = AttackMode::kTargeted;
  Label target = Label::kPositive;
};

/// True when delta is inside the ball (up to `tol`) and x_adv inside [0,1].
inline bool IsFeasible(const AttackResult& r, const ThreatModel& tm, double tol = 1e-9) {
  if (NormOf(r.delta.data, tm.norm) > tm.epsilon + tol) return false;
  return std::all_of(r.x_adv.data.begin(), r.x_adv.data.end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

/// Objective: returns f(x) and writes df/dx into grad.
template <class F>
concept InputObjective = requires(F f, const Tensor& x, std::vector<double>& g) {
  { f(x, g) } -> std::convertible_to<double>;
};

/// PGD minimization of `objective` over {delta : |delta| <= eps, x+delta in
/// [0,1]}. The trace holds objective values for steps 0..tm.steps.
template <InputObjective Objective>
AttackResult MinimizeInBall(Objective&& objective, const Tensor& x, const ThreatModel& tm,
                            std::uint64_t seed = 0) {
  tm.Validate();
  for (double v : x.data) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::kShapeMismatch, "attack input outside [0,1]");
    }
  }
  const std::size_t n = x.size();
  auto box = [&](std::vector<double>& d) {
    for (std::size_t i = 0; i < n; ++i) d[i] = std::clamp(d[i], -x.data[i], 1.0 - x.data[i]);
  };
  auto apply = [&](const std::vector<double>& d) {
    Tensor out = x;
    for (std::size_t i = 0; i < n; ++i) out.data[i] = std::clamp(x.data[i] + d[i], 0.0, 1.0);
    return out;
  };

  std::vector<double> delta(n, 0.0);
  if (tm.random_start && tm.epsilon > 0) {
    std::mt19937_64 rng(seed);
    if (tm.norm == Norm::kLinf) {
      std::uniform_real_distribution<double> u(-tm.epsilon, tm.epsilon);
      for (double& v : delta) v = u(rng);
    } else {
      std::normal_distribution<double> g(0.0, 1.0);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (double& v : delta) v = g(rng);
      const double len = NormOf(delta, Norm::kL2);
      const double radius = tm.epsilon * std::pow(u(rng), 1.0 / static_cast<double>(n));
      for (double& v : delta) v = len > 0 ? v * radius / len : 0.0;
    }
    box(delta);
  }

  AttackResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(tm.steps) + 1);
  std::vector<double> grad(n);
  std::vector<double> best_delta = delta;
  double best = 0;
  for (int k = 0;; ++k) {
    const Tensor xk = apply(delta);
    const double value = objective(xk, grad);
    result.loss_trace.push_back(value);
    if (k == 0 || value < best) {
      best = value;
      best_delta = delta;
      result.best_step = k;
    }
    if (k == tm.steps) break;
    for (double g : grad) {
      if (!std::isfinite(g)) {
        throw Error(ErrorKind::kNonFiniteGradient, "at step " + std::to_string(k));
      }
    }
    if (tm.norm == Norm::kLinf) {
      for (std::size_t i = 0; i < n; ++i) {
        const double s = grad[i] > 0 ? 1.0 : (grad[i] < 0 ? -1.0 : 0.0);
        delta[i] -= tm.alpha * s;
      }
    } else {
      const double len = NormOf(grad, Norm::kL2);
      if (len > 0) {
        for (std::size_t i = 0; i < n; ++i) delta[i] -= tm.alpha * grad[i] / len;
      }
    }
    delta = Project(delta, tm);
    box(delta);
  }
  result.x_adv = apply(best_delta);
  result.delta = Tensor(x.shape, std::move(best_delta));
  return result;
}

/// Anything with a differentiable per-label loss, e.g. OneClassClassifier.
template <class M>
concept LossModel = requires(const M& m, const Tensor& x, Label y, std::vector<double>& g) {
  { m.LossAndInputGradient(x, y, g) } -> std::convertible_to<double>;
};

/// Targeted: minimizes L(target, .) to move x toward `target`.
/// Untargeted: `target` is the true label; maximizes L(target, .).
/// The returned loss trace always holds L(target, .).
template <LossModel Model>
AttackResult Pgd(const Model& model, const Tensor& x, Label target, AttackMode mode,
                 const ThreatModel& tm, std::uint64_t seed = 0) {
  const double sign = mode == AttackMode::kTargeted ? 1.0 : -1.0;
  AttackResult r = MinimizeInBall(
      [&](const Tensor& xk, std::vector<double>& g) {
        const double loss = model.LossAndInputGradient(xk, target, g);
        if (!std::isfinite(loss)) throw Error(ErrorKind::kNonFiniteGradient, "loss is not finite");
        if (sign < 0) {
          for (double& v : g) v = -v;
        }
        return sign * loss;
      },
      x, tm, seed);
  if (sign < 0) {
    for (double& v : r.loss_trace) v = -v;
  }
  r.mode = mode;
  r.target = target;
  return r;
}

enum class AttackPolicy {
  // Normal samples are attacked untargeted, anomalies targeted toward +1.
  kOneClass,
  // Every sample is attacked toward an explicitly supplied label.
  kFree,
};

/// Attacks every sample; sample i uses the seed stream MixSeed(seed, i).
/// `free_targets` is required for AttackPolicy::kFree.
template <LossModel Model>
std::vector<AttackResult> AttackBatch(const Model& model,
                                      const std::vector<LabeledSample>& samples,
                                      AttackPolicy policy, const ThreatModel& tm,
                                      std::uint64_t seed,
                                      const std::vector<Label>* free_targets = nullptr) {
  if (policy == AttackPolicy::kFree &&
      (free_targets == nullptr || free_targets->size() != samples.size())) {
    throw Error(ErrorKind::kInvalidTarget, "free policy needs one target per sample");
  }
  std::vector<AttackResult> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Label target = Label::kPositive;
    AttackMode mode = AttackMode::kTargeted;
    if (policy == AttackPolicy::kOneClass) {
      mode = samples[i].y == Label::kPositive ? AttackMode::kUntargeted
                                              : AttackMode::kTargeted;
    } else {
      target = (*free_targets)[i];
    }
    try {
      out.push_back(Pgd(model, samples[i].x, target, mode, tm, MixSeed(seed, i)));
    } catch (const Error& e) {
      throw Error(e.kind(), "sample " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace nrfbench

#endif  // NRFBENCH_ATTACK_HPP_
