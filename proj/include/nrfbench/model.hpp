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

// One-class head on top of a frozen encoder:
//
//   h1 = lrelu(W1 e + b1)         e = enc(x) in R^r
//   h2 = lrelu(W2 h1 + b2)
//   z  = W3 h2 + b3
//   f  = exp(-z^2 / (2 sigma^2))  features, elementwise, in (0,1]
//   q  = |f - 1|^2 / (2 s^2)      distance to the fixed all-ones centre
//   o  = exp(-q)                  in (0,1]
//   C  = 2 o - 1                  score in (-1,1]
//
// Training uses binary cross entropy of o against (y+1)/2, written in terms
// of q for stability: -log o = q and -log(1-o) = -log(-expm1(-q)).

#ifndef NRFBENCH_MODEL_HPP_
#define NRFBENCH_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "nrfbench/encoder.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/tensor.hpp"

namespace nrfbench {

inline constexpr double kLeakySlope = 0.01;
// Lower clamp on q inside the negative-class loss, i.e. o <= 1 - ~1e-7.
inline constexpr double kMinDistance = 1e-7;
inline constexpr double kMinPositiveParam = 1e-3;

inline double BumpActivation(double z, double sigma) {
  return std::exp(-(z * z) / (2.0 * sigma * sigma));
}

inline std::vector<double> BumpActivation(std::span<const double> z, double sigma) {
  std::vector<double> out(z.size());
  std::transform(z.begin(), z.end(), out.begin(),
                 [sigma](double v) { return BumpActivation(v, sigma); });
  return out;
}

/// BCE between o = exp(-q) and the {0,1} target of `y`.
inline double BceFromDistance(double q, Label y) {
  if (y == Label::kPositive) return q;
  return -std::log(-std::expm1(-std::max(q, kMinDistance)));
}

/// d BceFromDistance / dq.
inline double BceSlope(double q, Label y) {
  if (y == Label::kPositive) return 1.0;
  return -1.0 / std::expm1(std::max(q, kMinDistance));
}

struct HeadParams {
  std::size_t r = 0;
  std::vector<double> w1, b1, w2, b2, w3, b3;  // row-major r x r, and r
  double sigma_bump = 1.0;
  double rbf_scale = 1.0;

  static HeadParams Zeros(std::size_t r) {
    HeadParams p;
    p.r = r;
    p.w1.assign(r * r, 0.0);
    p.w2.assign(r * r, 0.0);
    p.w3.assign(r * r, 0.0);
    p.b1.assign(r, 0.0);
    p.b2.assign(r, 0.0);
    p.b3.assign(r, 0.0);
    p.sigma_bump = 0.0;
    p.rbf_scale = 0.0;
    return p;
  }

  /// Uniform(-1/sqrt(r), 1/sqrt(r)) weights and biases; sigma = s = 1.
  static HeadParams Init(std::size_t r, std::uint64_t seed) {
    HeadParams p = Zeros(r);
    const double bound = 1.0 / std::sqrt(static_cast<double>(r));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-bound, bound);
    for (auto* block : {&p.w1, &p.b1, &p.w2, &p.b2, &p.w3, &p.b3}) {
      for (auto& v : *block) v = u(rng);
    }
    p.sigma_bump = 1.0;
    p.rbf_scale = 1.0;
    return p;
  }

  /// Every trainable value as a mutable span, in a fixed order.
  std::vector<std::span<double>> Blocks() {
    return {w1, b1, w2, b2, w3, b3, std::span<double>(&sigma_bump, 1),
            std::span<double>(&rbf_scale, 1)};
  }

  bool operator==(const HeadParams&) const = default;
};

/// Intermediate values of one forward pass, kept for backprop.
struct Activations {
  std::vector<double> e, a1, h1, a2, h2, z, f;
  double q = 0;
  double o = 0;
};

class OneClassClassifier {
 public:
  OneClassClassifier(std::shared_ptr<const Encoder> encoder, HeadParams head)
      : encoder_(std::move(encoder)), head_(std::move(head)) {
    if (!encoder_) throw Error(ErrorKind::kInvalidConfig, "classifier needs an encoder");
    const std::size_t r = encoder_->output_dim();
    if (head_.r != r || head_.w1.size() != r * r || head_.w2.size() != r * r ||
        head_.w3.size() != r * r || head_.b1.size() != r || head_.b2.size() != r ||
        head_.b3.size() != r) {
      throw Error(ErrorKind::kShapeMismatch, "head parameters do not match encoder dim");
    }
    if (!(head_.sigma_bump > 0) || !(head_.rbf_scale > 0)) {
      throw Error(ErrorKind::kInvalidSpec, "sigma_bump and rbf_scale must be > 0");
    }
  }

  static OneClassClassifier Initialize(std::shared_ptr<const Encoder> encoder,
                                       std::uint64_t seed) {
    const std::size_t r = encoder->output_dim();
    return {std::move(encoder), HeadParams::Init(r, seed)};
  }

  const Encoder& encoder() const { return *encoder_; }
  const std::shared_ptr<const Encoder>& encoder_ptr() const { return encoder_; }
  const HeadParams& head() const { return head_; }
  HeadParams& mutable_head() { return head_; }
  std::size_t feature_dim() const { return head_.r; }

  Activations Forward(const Tensor& x) const {
    const std::size_t r = head_.r;
    Activations a;
    a.e = encoder_->Forward(x);
    a.a1 = Affine(head_.w1, head_.b1, a.e);
    a.h1 = LeakyRelu(a.a1);
    a.a2 = Affine(head_.w2, head_.b2, a.h1);
    a.h2 = LeakyRelu(a.a2);
    a.z = Affine(head_.w3, head_.b3, a.h2);
    a.f = BumpActivation(a.z, head_.sigma_bump);
    double dist = 0;
    for (std::size_t i = 0; i < r; ++i) dist += (a.f[i] - 1.0) * (a.f[i] - 1.0);
    a.q = dist / (2.0 * head_.rbf_scale * head_.rbf_scale);
    a.o = std::exp(-a.q);
    return a;
  }

  std::vector<double> Features(const Tensor& x) const { return Forward(x).f; }
  /// RBF output o in (0,1].
  double Output(const Tensor& x) const { return Forward(x).o; }
  /// Classifier score C = 2o - 1 in (-1,1].
  double Score(const Tensor& x) const { return 2.0 * Output(x) - 1.0; }

  /// BCE loss for `target`; optionally accumulates head-parameter gradients
  /// into `param_grad` and writes the input gradient into `input_grad`.
  double LossAndGradients(const Tensor& x, Label target, HeadParams* param_grad,
                          std::vector<double>* input_grad) const {
    const Activations a = Forward(x);
    const double loss = BceFromDistance(a.q, target);
    const double slope = BceSlope(a.q, target);
    const double s = head_.rbf_scale;
    std::vector<double> gf(head_.r);
    for (std::size_t i = 0; i < head_.r; ++i) gf[i] = slope * (a.f[i] - 1.0) / (s * s);
    if (param_grad) param_grad->rbf_scale += slope * (-2.0 * a.q / s);
    Backprop(x, a, gf, param_grad, input_grad);
    return loss;
  }

  /// Loss and d loss / dx; the concept used by the attack module.
  double LossAndInputGradient(const Tensor& x, Label target,
                              std::vector<double>& grad) const {
    return LossAndGradients(x, target, nullptr, &grad);
  }

  /// Gradient w.r.t. x of a linear functional <gf, f(x)> of the features.
  std::vector<double> FeatureVjp(const Tensor& x, std::span<const double> gf) const {
    const Activations a = Forward(x);
    std::vector<double> grad;
    Backprop(x, a, gf, nullptr, &grad);
    return grad;
  }

 private:
  std::vector<double> Affine(const std::vector<double>& w, const std::vector<double>& b,
                             const std::vector<double>& in) const {
    const std::size_t r = head_.r;
    std::vector<double> out(b);
    for (std::size_t i = 0; i < r; ++i) {
      const double* row = &w[i * r];
      double acc = 0;
      for (std::size_t j = 0; j < r; ++j) acc += row[j] * in[j];
      out[i] += acc;
    }
    return out;
  }

  static std::vector<double> LeakyRelu(const std::vector<double>& in) {
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      out[i] = in[i] > 0 ? in[i] : kLeakySlope * in[i];
    }
    return out;
  }

  // Propagates dL/df back through the head (and the encoder when
  // `input_grad` is requested). Accumulates into `param_grad`.
  void Backprop(const Tensor& x, const Activations& a, std::span<const double> gf,
                HeadParams* param_grad, std::vector<double>* input_grad) const {
    const std::size_t r = head_.r;
    const double sigma = head_.sigma_bump;
    std::vector<double> gz(r);
    for (std::size_t i = 0; i < r; ++i) {
      gz[i] = gf[i] * a.f[i] * (-a.z[i] / (sigma * sigma));
      if (param_grad) {
        param_grad->sigma_bump += gf[i] * a.f[i] * a.z[i] * a.z[i] / (sigma * sigma * sigma);
      }
    }
    auto layer_back = [&](const std::vector<double>& w, const std::vector<double>& in,
                          const std::vector<double>& g, std::vector<double>* gw,
                          std::vector<double>* gb) {
      if (gw) {
        for (std::size_t i = 0; i < r; ++i) {
          if (g[i] == 0.0) continue;
          for (std::size_t j = 0; j < r; ++j) (*gw)[i * r + j] += g[i] * in[j];
          (*gb)[i] += g[i];
        }
      }
      std::vector<double> gin(r, 0.0);
      for (std::size_t i = 0; i < r; ++i) {
        if (g[i] == 0.0) continue;
        const double* row = &w[i * r];
        for (std::size_t j = 0; j < r; ++j) gin[j] += row[j] * g[i];
      }
      return gin;
    };
    auto lrelu_back = [](std::vector<double> g, const std::vector<double>& pre) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(pre[i] > 0)) g[i] *= kLeakySlope;
      }
      return g;
    };

    HeadParams* pg = param_grad;
    std::vector<double> gh2 = layer_back(head_.w3, a.h2, gz, pg ? &pg->w3 : nullptr,
                                         pg ? &pg->b3 : nullptr);
    std::vector<double> ga2 = lrelu_back(std::move(gh2), a.a2);
    std::vector<double> gh1 = layer_back(head_.w2, a.h1, ga2, pg ? &pg->w2 : nullptr,
                                         pg ? &pg->b2 : nullptr);
    std::vector<double> ga1 = lrelu_back(std::move(gh1), a.a1);
    if (!input_grad && !pg) return;
    std::vector<double> ge = layer_back(head_.w1, a.e, ga1, pg ? &pg->w1 : nullptr,
                                        pg ? &pg->b1 : nullptr);
    if (input_grad) *input_grad = encoder_->Vjp(x, ge);
  }

  std::shared_ptr<const Encoder> encoder_;
  HeadParams head_;
};

/// Gradient of the BCE loss for `target` with respect to the input.
inline Tensor GradInput(const OneClassClassifier& clf, const Tensor& x, Label target) {
  std::vector<double> g;
  clf.LossAndInputGradient(x, target, g);
  return Tensor(x.shape, std::move(g));
}

}  // namespace nrfbench

#endif  // NRFBENCH_MODEL_HPP_
