// Copyright 2026 The pano360 Authors
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

#include <random>
#include <string>
#include <vector>

#include "pano/autograd.hpp"

namespace pano {

using Rng = std::mt19937_64;

enum class Mode { kTrain, kEval };

/// Per-call switches for layers whose behaviour depends on the phase.
struct ForwardContext {
  Mode mode = Mode::kEval;
  bool update_running_stats = false;
  Rng* dropout_rng = nullptr;  // required when dropout is active
};

template <typename S>
struct NamedParameter {
  std::string name;
  Variable<S> value;
};

template <typename S>
struct NamedBuffer {
  std::string name;
  Tensor<S>* value;
};

/// Convolution (or transposed convolution) with a per-channel bias.
template <typename S>
class Conv2d {
 public:
  Conv2d(Index in_channels, Index out_channels, ConvGeometry geometry, bool transposed);

  Variable<S> forward(const Variable<S>& x) const;
  Shape output_shape(const Shape& input) const;

  Index in_channels() const { return in_channels_; }
  Index out_channels() const { return out_channels_; }
  const ConvGeometry& geometry() const { return geometry_; }
  bool transposed() const { return transposed_; }

  void reset_parameters(Rng& rng);
  void collect(const std::string& prefix, std::vector<NamedParameter<S>>& out) const;

 private:
  Index in_channels_;
  Index out_channels_;
  ConvGeometry geometry_;
  bool transposed_;
  Variable<S> weight_;
  Variable<S> bias_;
};

template <typename S>
class BatchNorm2d {
 public:
  explicit BatchNorm2d(Index channels, S momentum = S(0.1), S eps = S(1e-5));

  Variable<S> forward(const Variable<S>& x, const ForwardContext& ctx);

  Index channels() const { return channels_; }
  void reset_parameters();
  void collect(const std::string& prefix, std::vector<NamedParameter<S>>& out) const;
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<S>>& out);

 private:
  Index channels_;
  S momentum_;
  S eps_;
  Variable<S> gamma_;
  Variable<S> beta_;
  Tensor<S> running_mean_;
  Tensor<S> running_var_;
};

/// Fully connected layer on [N, F, 1, 1] inputs.
template <typename S>
class Linear {
 public:
  Linear(Index in_features, Index out_features);

  Variable<S> forward(const Variable<S>& x) const;

  Index in_features() const { return in_features_; }
  Index out_features() const { return out_features_; }
  void reset_parameters(Rng& rng);
  void collect(const std::string& prefix, std::vector<NamedParameter<S>>& out) const;

 private:
  Index in_features_;
  Index out_features_;
  Variable<S> weight_;
  Variable<S> bias_;
};

/// Inverted dropout: keeps each element with probability 1 - p and rescales.
template <typename S>
Variable<S> dropout(const Variable<S>& x, double p, const ForwardContext& ctx);

}  // namespace pano
