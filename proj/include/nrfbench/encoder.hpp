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

// Frozen encoders. An encoder maps an input tensor to R^r and exposes a
// vector-Jacobian product so attacks can differentiate through it. Encoders
// are immutable once built and are shared between classifiers.

#ifndef NRFBENCH_ENCODER_HPP_
#define NRFBENCH_ENCODER_HPP_

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nrfbench/digest.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/tensor.hpp"

namespace nrfbench {

class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::string name() const = 0;
  virtual const Shape& input_shape() const = 0;
  virtual std::size_t output_dim() const = 0;

  virtual std::vector<double> Forward(const Tensor& x) const = 0;
  /// Returns d<grad_out, enc(x)>/dx.
  virtual std::vector<double> Vjp(const Tensor& x,
                                  std::span<const double> grad_out) const = 0;
  /// Everything needed to rebuild the encoder with MakeEncoder.
  virtual nlohmann::json Descriptor() const = 0;
  /// Content hash over the descriptor and all weights.
  virtual std::string Digest() const = 0;

 protected:
  void CheckShape(const Tensor& x) const {
    if (x.shape != input_shape()) {
      throw Error(ErrorKind::kShapeMismatch,
                  name() + " encoder expects " + ShapeToString(input_shape()) +
                      ", got " + ShapeToString(x.shape));
    }
  }
};

/// Identity map; r equals the number of input elements.
class IdentityEncoder final : public Encoder {
 public:
  explicit IdentityEncoder(Shape shape) : shape_(std::move(shape)) {}

  std::string name() const override { return "identity"; }
  const Shape& input_shape() const override { return shape_; }
  std::size_t output_dim() const override { return NumElements(shape_); }

  std::vector<double> Forward(const Tensor& x) const override {
    CheckShape(x);
    return x.data;
  }
  std::vector<double> Vjp(const Tensor& x, std::span<const double> g) const override {
    CheckShape(x);
    return {g.begin(), g.end()};
  }
  nlohmann::json Descriptor() const override {
    return {{"name", name()}, {"input_shape", shape_}};
  }
  std::string Digest() const override { return Sha256Hex(Descriptor().dump()); }

 private:
  Shape shape_;
};

// 3x3 valid convolution, tanh, global average pool. Randomly initialized
// from a seed and never trained; intended for image-shaped smoke runs.
class ConvEncoder final : public Encoder {
 public:
  ConvEncoder(Shape shape, std::size_t channels, std::uint64_t seed)
      : shape_(std::move(shape)), channels_(channels), seed_(seed) {
    if (shape_.size() != 3 || shape_[1] < 3 || shape_[2] < 3 || channels_ == 0) {
      throw Error(ErrorKind::kShapeMismatch,
                  "conv encoder needs (C,H,W) input with H,W >= 3");
    }
    const std::size_t fan_in = shape_[0] * 9;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::mt19937_64 rng(seed_);
    std::uniform_real_distribution<double> u(-bound, bound);
    weights_.resize(channels_ * fan_in);
    bias_.resize(channels_);
    for (auto& w : weights_) w = u(rng);
    for (auto& b : bias_) b = u(rng);
  }

  std::string name() const override { return "conv"; }
  const Shape& input_shape() const override { return shape_; }
  std::size_t output_dim() const override { return channels_; }

  std::vector<double> Forward(const Tensor& x) const override {
    CheckShape(x);
    std::vector<double> out(channels_, 0.0);
    const std::size_t oh = shape_[1] - 2, ow = shape_[2] - 2;
    for (std::size_t k = 0; k < channels_; ++k) {
      double acc = 0;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) acc += std::tanh(PreActivation(x, k, i, j));
      }
      out[k] = acc / static_cast<double>(oh * ow);
    }
    return out;
  }

  std::vector<double> Vjp(const Tensor& x, std::span<const double> g) const override {
    CheckShape(x);
    const std::size_t c = shape_[0], h = shape_[1], w = shape_[2];
    const std::size_t oh = h - 2, ow = w - 2;
    const double inv_area = 1.0 / static_cast<double>(oh * ow);
    std::vector<double> grad(x.size(), 0.0);
    for (std::size_t k = 0; k < channels_; ++k) {
      if (g[k] == 0.0) continue;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          const double t = std::tanh(PreActivation(x, k, i, j));
          const double upstream = g[k] * inv_area * (1.0 - t * t);
          for (std::size_t ci = 0; ci < c; ++ci) {
            for (std::size_t di = 0; di < 3; ++di) {
              for (std::size_t dj = 0; dj < 3; ++dj) {
                grad[(ci * h + i + di) * w + j + dj] +=
                    upstream * weights_[((k * c + ci) * 3 + di) * 3 + dj];
              }
            }
          }
        }
      }
    }
    return grad;
  }

  nlohmann::json Descriptor() const override {
    return {{"name", name()}, {"input_shape", shape_}, {"channels", channels_},
            {"seed", seed_}};
  }
  std::string Digest() const override {
    return Sha256().update(Descriptor().dump()).update(weights_).update(bias_).hex();
  }

 private:
  double PreActivation(const Tensor& x, std::size_t k, std::size_t i,
                       std::size_t j) const {
    const std::size_t c = shape_[0], h = shape_[1], w = shape_[2];
    double acc = bias_[k];
    for (std::size_t ci = 0; ci < c; ++ci) {
      for (std::size_t di = 0; di < 3; ++di) {
        for (std::size_t dj = 0; dj < 3; ++dj) {
          acc += weights_[((k * c + ci) * 3 + di) * 3 + dj] *
                 x.data[(ci * h + i + di) * w + j + dj];
        }
      }
    }
    return acc;
  }

  Shape shape_;
  std::size_t channels_;
  std::uint64_t seed_;
  std::vector<double> weights_;  // (channels, C, 3, 3)
  std::vector<double> bias_;
};

/// Builds an encoder by name: "identity" or "conv". Options are read from
/// `options` ("channels", "seed").
inline std::shared_ptr<const Encoder> MakeEncoder(
    const std::string& name, const Shape& input_shape,
    const nlohmann::json& options = nlohmann::json::object()) {
  if (name == "identity") return std::make_shared<IdentityEncoder>(input_shape);
  if (name == "conv") {
    return std::make_shared<ConvEncoder>(input_shape,
                                         options.value("channels", std::size_t{8}),
                                         options.value("seed", std::uint64_t{0}));
  }
  throw Error(ErrorKind::kInvalidConfig, "unknown encoder '" + name + "'");
}

inline std::shared_ptr<const Encoder> MakeEncoder(const nlohmann::json& descriptor) {
  try {
    return MakeEncoder(descriptor.at("name").get<std::string>(),
                       descriptor.at("input_shape").get<Shape>(), descriptor);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParseError, std::string("encoder descriptor: ") + e.what());
  }
}

}  // namespace nrfbench

#endif  // NRFBENCH_ENCODER_HPP_
