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

// U-net generator and the two Wasserstein critics operating on cube maps.
//
// Cube-map batches are stored face-major: a batch of N panoramas is a
// [6N, C, S, S] tensor whose entry f * N + n holds face f of panorama n,
// with faces in canonical F, R, B, L, T, D order. Network-facing images
// live in [-1, 1]; module boundaries use [0, 1].

#include <span>
#include <string>
#include <vector>

#include "pano/layers.hpp"

namespace pano {

inline constexpr Index kCubeFaces = 6;

struct GeneratorConfig {
  Index in_channels = 4;  // RGB + mask
  Index base_width = 64;
  int depth = 7;          // encoder layers; the decoder mirrors them
  double dropout_p = 0.5;
  int dropout_layers = 2;  // leading decoder layers with dropout
  Index out_channels = 3;
  double leaky_slope = 0.2;

  /// Encoder output widths: base * min(2^i, 8).
  std::vector<Index> encoder_widths() const;
  /// Smallest face size the encoder can halve `depth` times.
  Index min_face_size() const { return Index{1} << depth; }
  void validate() const;
  /// Default configuration, with depth capped at log2(face_size).
  static GeneratorConfig for_face_size(Index face_size);
};

struct CriticConfig {
  Index in_channels = 24;
  Index base_width = 64;
  int conv_layers = 4;
  Index face_size = 256;
  double leaky_slope = 0.2;

  Index final_width() const { return base_width << (conv_layers - 1); }
  Index final_extent() const { return face_size >> conv_layers; }
  /// Input size of the affine scoring layer.
  Index flatten_features() const { return final_width() * final_extent() * final_extent(); }
  void validate() const;

  /// All six faces stacked channel-wise: 6 x (RGB + mask).
  static CriticConfig whole(Index face_size) { return {kCubeFaces * 4, 64, 4, face_size, 0.2}; }
  /// One face at a time: RGB + mask.
  static CriticConfig slice(Index face_size) { return {4, 64, 4, face_size, 0.2}; }
};

/// Structural description of one layer, for introspection and reports.
struct LayerSpec {
  std::string name;  // "Layer1", ...
  std::string kind;  // "Conv", "DeConv", "Linear"
  Index in_channels = 0;
  Index out_channels = 0;
  Index kernel = 0;
  Index stride = 0;
  Index padding = 0;
  bool batch_norm = false;
  std::string activation;  // "LeakyReLU", "ReLU", "Tanh", ""
  double dropout = 0.0;
  std::string concat_with;  // encoder layer concatenated after this one
};

template <typename S>
class Generator {
 public:
  explicit Generator(GeneratorConfig config);

  /// [B, 4, S, S] network-space input to [B, 3, S, S] tanh output.
  /// When `trace` is set, each numbered layer's output shape is appended
  /// (after concatenation for decoder layers).
  Variable<S> forward(const Variable<S>& input, const ForwardContext& ctx, std::vector<Shape>* trace = nullptr);

  const GeneratorConfig& config() const { return config_; }
  std::vector<LayerSpec> describe() const;
  std::vector<NamedParameter<S>> parameters() const;
  std::vector<NamedBuffer<S>> buffers();
  void reset_parameters(Rng& rng);

 private:
  GeneratorConfig config_;
  std::vector<Conv2d<S>> encoder_;
  std::vector<BatchNorm2d<S>> encoder_norms_;  // for encoder layers 2..depth
  std::vector<Conv2d<S>> decoder_;
  std::vector<BatchNorm2d<S>> decoder_norms_;  // all decoder layers but the last
};

/// Convolutional Wasserstein critic with an unbounded scalar output.
template <typename S>
class Critic {
 public:
  explicit Critic(CriticConfig config);

  /// [N, C, S, S] to [N, 1, 1, 1].
  Variable<S> forward(const Variable<S>& input, const ForwardContext& ctx, std::vector<Shape>* trace = nullptr);

  const CriticConfig& config() const { return config_; }
  std::vector<LayerSpec> describe() const;
  std::vector<NamedParameter<S>> parameters() const;
  std::vector<NamedBuffer<S>> buffers();
  void reset_parameters(Rng& rng);

 private:
  CriticConfig config_;
  std::vector<Conv2d<S>> convs_;
  std::vector<BatchNorm2d<S>> norms_;  // for conv layers 2..n
  Linear<S> head_;
};

template <typename S>
Index parameter_count(const std::vector<NamedParameter<S>>& params) {
  Index total = 0;
  for (const auto& p : params) total += p.value.value().size();
  return total;
}

// ---------------------------------------------------------------------------
// Cube-map batch helpers

/// [0, 1] -> [-1, 1]
template <typename S> Variable<S> to_network_range(const Variable<S>& x);
/// [-1, 1] -> [0, 1]
template <typename S> Variable<S> from_network_range(const Variable<S>& x);

/// Runs the generator on damaged faces [6N, 3, S, S] and masks [6N, 1, S, S],
/// all in [0, 1]. Returns generated faces in [0, 1].
template <typename S>
Variable<S> generator_forward(Generator<S>& generator, const Tensor<S>& damaged, const Tensor<S>& masks,
                              const ForwardContext& ctx);

/// mask * input + (1 - mask) * generated, with the mask broadcast over RGB.
template <typename S>
Variable<S> composite(const Variable<S>& generated, const Tensor<S>& input, const Tensor<S>& masks);

/// Repeats single-channel masks across `channels`.
template <typename S> Tensor<S> expand_channels(const Tensor<S>& masks, Index channels);

/// Face-major [6N, C, S, S] to channel-stacked [N, 6C, S, S].
template <typename S> Variable<S> stack_faces(const Variable<S>& faces);

/// Interleaves channel-stacked RGB [N, 18, S, S] with stacked masks
/// [N, 6, S, S] into the whole critic's [N, 24, S, S] input.
template <typename S> Variable<S> whole_critic_input_stacked(const Variable<S>& rgb, const Tensor<S>& masks);

/// Stacks network-space faces [6N, 3, S, S] with masks into [N, 24, S, S].
template <typename S> Variable<S> whole_critic_input(const Variable<S>& faces, const Tensor<S>& masks);

template <typename S>
Variable<S> whole_critic_forward(Critic<S>& critic, const Variable<S>& faces, const Tensor<S>& masks,
                                 const ForwardContext& ctx);

/// Scores each face separately with shared weights and averages the six
/// scores. Per-face scores are returned through `per_face` when given.
template <typename S>
Variable<S> slice_critic_forward(Critic<S>& critic, const Variable<S>& faces, const Tensor<S>& masks,
                                 const ForwardContext& ctx, std::vector<Variable<S>>* per_face = nullptr);

/// Arithmetic mean of exactly six per-face score tensors.
template <typename S> Variable<S> aggregate_face_scores(std::span<const Variable<S>> scores);

}  // namespace pano
