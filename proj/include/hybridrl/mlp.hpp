// Copyright 2026 The hybridrl Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hybridrl/error.hpp"

namespace hybridrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class Activation { kRelu, kLinear };

inline const char* to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "linear";
}

// Layer shapes of a fully connected network. `activations` has one entry per
// weight layer, so the last entry is the output activation.
struct MLPSpec {
  std::vector<int> layer_sizes;
  std::vector<Activation> activations;

  // relu hidden layers, linear output.
  static MLPSpec make(int input, const std::vector<int>& hidden, int output) {
    MLPSpec spec;
    spec.layer_sizes.push_back(input);
    for (int h : hidden) spec.layer_sizes.push_back(h);
    spec.layer_sizes.push_back(output);
    spec.activations.assign(spec.layer_sizes.size() - 1, Activation::kRelu);
    spec.activations.back() = Activation::kLinear;
    return spec;
  }

  std::size_t num_layers() const { return activations.size(); }
  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }

  void validate() const {
    if (layer_sizes.size() < 2) throw ShapeError("MLPSpec needs at least 2 layer sizes");
    if (activations.size() != layer_sizes.size() - 1)
      throw ShapeError("MLPSpec activations must have one entry per weight layer");
    for (int s : layer_sizes)
      if (s <= 0) throw ShapeError("MLPSpec layer sizes must be positive");
  }

  bool operator==(const MLPSpec&) const = default;
};

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

// Weights and gradients share one layout; the tag keeps them from mixing.
template <class Tag>
struct LayerTensors {
  std::vector<DenseLayer> layers;

  std::size_t coordinate_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  // Flat coordinate view: per layer, weights in storage order then biases.
  double& coordinate(std::size_t i) {
    for (auto& l : layers) {
      const auto nw = static_cast<std::size_t>(l.weight.size());
      if (i < nw) return l.weight.data()[i];
      i -= nw;
      const auto nb = static_cast<std::size_t>(l.bias.size());
      if (i < nb) return l.bias.data()[i];
      i -= nb;
    }
    throw ShapeError("coordinate index out of range");
  }
  double coordinate(std::size_t i) const { return const_cast<LayerTensors&>(*this).coordinate(i); }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  template <class Other>
  bool same_shape(const LayerTensors<Other>& o) const {
    if (layers.size() != o.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].weight.rows() != o.layers[i].weight.rows() ||
          layers[i].weight.cols() != o.layers[i].weight.cols() ||
          layers[i].bias.size() != o.layers[i].bias.size())
        return false;
    }
    return true;
  }

  template <class Other>
  static LayerTensors zeros_like(const LayerTensors<Other>& o) {
    LayerTensors z;
    z.layers.reserve(o.layers.size());
    for (const auto& l : o.layers)
      z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
    return z;
  }

  LayerTensors& operator+=(const LayerTensors& o) {
    if (!same_shape(o)) throw ShapeError("tensor shape mismatch in +=");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].weight += o.layers[i].weight;
      layers[i].bias += o.layers[i].bias;
    }
    return *this;
  }

  LayerTensors& operator*=(double s) {
    for (auto& l : layers) {
      l.weight *= s;
      l.bias *= s;
    }
    return *this;
  }

  bool operator==(const LayerTensors& o) const {
    if (!same_shape(o)) return false;
    for (std::size_t i = 0; i < layers.size(); ++i)
      if (layers[i].weight != o.layers[i].weight || layers[i].bias != o.layers[i].bias) return false;
    return true;
  }
};

struct ParamsTag;
struct GradsTag;
using MLPParams = LayerTensors<ParamsTag>;
using Gradients = LayerTensors<GradsTag>;

inline void check_shape(const MLPSpec& spec, const MLPParams& params) {
  if (params.layers.size() != spec.num_layers()) throw ShapeError("params layer count does not match spec");
  for (std::size_t i = 0; i < spec.num_layers(); ++i) {
    const auto& l = params.layers[i];
    if (l.weight.rows() != spec.layer_sizes[i + 1] || l.weight.cols() != spec.layer_sizes[i] ||
        l.bias.size() != spec.layer_sizes[i + 1])
      throw ShapeError("params layer " + std::to_string(i) + " does not match spec");
  }
}

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
inline MLPParams init_params(const MLPSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  MLPParams params;
  for (std::size_t i = 0; i < spec.num_layers(); ++i) {
    const int in = spec.layer_sizes[i];
    const int out = spec.layer_sizes[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

// Per-layer values kept for the backward pass. Columns are samples.
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;   // pre-activations
  std::vector<Matrix> post;  // post-activations; post.back() is the output
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

inline ForwardResult mlp_forward(const MLPSpec& spec, const MLPParams& params, const Matrix& input) {
  check_shape(spec, params);
  if (input.rows() != spec.input_dim())
    throw ShapeError("input has " + std::to_string(input.rows()) + " rows, expected " +
                     std::to_string(spec.input_dim()));
  ForwardResult res;
  res.cache.input = input;
  res.cache.pre.reserve(spec.num_layers());
  res.cache.post.reserve(spec.num_layers());
  const Matrix* x = &res.cache.input;
  for (std::size_t i = 0; i < spec.num_layers(); ++i) {
    const auto& l = params.layers[i];
    Matrix z(l.weight.rows(), x->cols());
    z.noalias() = l.weight * (*x);
    z.colwise() += l.bias;
    Matrix a = spec.activations[i] == Activation::kRelu ? Matrix(z.cwiseMax(0.0)) : z;
    res.cache.pre.push_back(std::move(z));
    res.cache.post.push_back(std::move(a));
    x = &res.cache.post.back();
  }
  res.output = res.cache.post.back();
  return res;
}

inline ForwardResult mlp_forward(const MLPSpec& spec, const MLPParams& params, const Vector& input) {
  return mlp_forward(spec, params, Matrix(input));
}

struct BackwardResult {
  Matrix input_grad;
  Gradients grads;  // empty when parameter gradients were not requested
};

// Reverse-mode pass for a batch. Parameter gradients are summed over columns.
// The relu derivative at exactly zero is taken as zero.
inline BackwardResult mlp_backward(const MLPSpec& spec, const MLPParams& params, const ForwardCache& cache,
                                   const Matrix& output_grad, bool want_param_grads = true) {
  check_shape(spec, params);
  if (cache.pre.size() != spec.num_layers()) throw ShapeError("forward cache does not match spec");
  if (output_grad.rows() != spec.output_dim() || output_grad.cols() != cache.input.cols())
    throw ShapeError("output gradient shape does not match forward cache");
  BackwardResult res;
  if (want_param_grads) res.grads.layers.resize(spec.num_layers());
  Matrix delta = output_grad;
  for (std::size_t i = spec.num_layers(); i-- > 0;) {
    if (spec.activations[i] == Activation::kRelu)
      delta = (cache.pre[i].array() > 0.0).select(delta, 0.0);
    const Matrix& x = i == 0 ? cache.input : cache.post[i - 1];
    if (want_param_grads) {
      res.grads.layers[i].weight.noalias() = delta * x.transpose();
      res.grads.layers[i].bias = delta.rowwise().sum();
    }
    Matrix next(params.layers[i].weight.cols(), delta.cols());
    next.noalias() = params.layers[i].weight.transpose() * delta;
    delta = std::move(next);
  }
  res.input_grad = std::move(delta);
  return res;
}

inline BackwardResult mlp_backward(const MLPSpec& spec, const MLPParams& params, const ForwardCache& cache,
                                   const Vector& output_grad, bool want_param_grads = true) {
  return mlp_backward(spec, params, cache, Matrix(output_grad), want_param_grads);
}

}  // namespace hybridrl
