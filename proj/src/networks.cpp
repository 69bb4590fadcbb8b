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

#include "pano/networks.hpp"

#include <algorithm>

namespace pano {

namespace {

bool is_power_of_two(Index v) { return v > 0 && (v & (v - 1)) == 0; }

const ConvGeometry kDownUp{4, 2, 1};

template <typename S>
void push_trace(std::vector<Shape>* trace, const Variable<S>& v) {
  if (trace != nullptr) trace->push_back(v.shape());
}

template <typename S>
Tensor<S> slice_batch(const Tensor<S>& t, Index start, Index count) {
  const Index per_item = t.size() / t.dim(0);
  Shape shape = t.shape();
  shape[0] = count;
  return Tensor<S>(shape, t.array().segment(start * per_item, count * per_item));
}

Index checked_panoramas(const Shape& faces, const Shape& masks) {
  if (faces[0] % kCubeFaces != 0 || faces[0] == 0)
    throw ShapeError("cube-map batch must hold a multiple of six faces, got " + to_string(faces));
  if (faces[1] != 3) throw ShapeError("faces must have 3 channels, got " + to_string(faces));
  if (masks != Shape{faces[0], 1, faces[2], faces[3]})
    throw ShapeError("masks " + to_string(masks) + " do not match faces " + to_string(faces));
  return faces[0] / kCubeFaces;
}

}  // namespace

std::vector<Index> GeneratorConfig::encoder_widths() const {
  std::vector<Index> widths;
  for (int i = 0; i < depth; ++i) widths.push_back(base_width * std::min<Index>(Index{1} << std::min(i, 3), 8));
  return widths;
}

void GeneratorConfig::validate() const {
  if (depth < 2 || depth > 12) throw ConfigError("generator depth must be in [2, 12]");
  if (base_width < 1 || in_channels < 1 || out_channels < 1) throw ConfigError("generator widths must be positive");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("dropout probability must be in [0, 1)");
  if (dropout_layers < 0 || dropout_layers > depth - 1) throw ConfigError("dropout_layers out of range");
}

GeneratorConfig GeneratorConfig::for_face_size(Index face_size) {
  if (!is_power_of_two(face_size) || face_size < 4) throw ConfigError("face size must be a power of two >= 4");
  GeneratorConfig config;
  int log2 = 0;
  while ((Index{1} << (log2 + 1)) <= face_size) ++log2;
  config.depth = std::min(config.depth, log2);
  config.dropout_layers = std::min(config.dropout_layers, config.depth - 1);
  return config;
}

void CriticConfig::validate() const {
  if (conv_layers < 1) throw ConfigError("critic needs at least one convolution");
  if (in_channels < 1 || base_width < 1) throw ConfigError("critic widths must be positive");
  if (!is_power_of_two(face_size) || final_extent() < 1)
    throw ConfigError("critic face size must be a power of two >= 2^conv_layers");
}

// ---------------------------------------------------------------------------
// Generator

template <typename S>
Generator<S>::Generator(GeneratorConfig config) : config_(config) {
  config_.validate();
  const auto widths = config_.encoder_widths();
  const int depth = config_.depth;
  for (int i = 0; i < depth; ++i) {
    encoder_.emplace_back(i == 0 ? config_.in_channels : widths[i - 1], widths[i], kDownUp, false);
    if (i > 0) encoder_norms_.emplace_back(widths[i]);
  }
  for (int j = 0; j < depth - 1; ++j) {
    const Index in = j == 0 ? widths[depth - 1] : 2 * widths[depth - 1 - j];
    decoder_.emplace_back(in, widths[depth - 2 - j], kDownUp, true);
    decoder_norms_.emplace_back(widths[depth - 2 - j]);
  }
  decoder_.emplace_back(2 * widths[0], config_.out_channels, kDownUp, true);
}

template <typename S>
Variable<S> Generator<S>::forward(const Variable<S>& input, const ForwardContext& ctx, std::vector<Shape>* trace) {
  const Shape& shape = input.shape();
  if (shape[1] != config_.in_channels)
    throw ShapeError("generator expects " + std::to_string(config_.in_channels) + " channels, got " + to_string(shape));
  if (shape[2] != shape[3] || !is_power_of_two(shape[2]) || shape[2] < config_.min_face_size())
    throw ShapeError("generator needs square power-of-two faces of at least " + std::to_string(config_.min_face_size()) +
                     " pixels, got " + to_string(shape));
  const auto slope = static_cast<S>(config_.leaky_slope);
  const int depth = config_.depth;

  std::vector<Variable<S>> skips;
  Variable<S> x = input;
  for (int i = 0; i < depth; ++i) {
    x = encoder_[static_cast<std::size_t>(i)].forward(x);
    if (i > 0) x = encoder_norms_[static_cast<std::size_t>(i - 1)].forward(x, ctx);
    x = leaky_relu(x, slope);
    skips.push_back(x);
    push_trace(trace, x);
  }
  for (int j = 0; j < depth - 1; ++j) {
    const auto u = static_cast<std::size_t>(j);
    x = decoder_[u].forward(x);
    x = decoder_norms_[u].forward(x, ctx);
    x = relu(x);
    if (j < config_.dropout_layers) x = dropout(x, config_.dropout_p, ctx);
    const std::vector<Variable<S>> parts{x, skips[static_cast<std::size_t>(depth - 2 - j)]};
    x = concat<S>(parts, 1);
    push_trace(trace, x);
  }
  x = tanh(decoder_.back().forward(x));
  push_trace(trace, x);
  return x;
}

template <typename S>
std::vector<LayerSpec> Generator<S>::describe() const {
  std::vector<LayerSpec> layers;
  const int depth = config_.depth;
  for (int i = 0; i < depth; ++i) {
    const auto& conv = encoder_[static_cast<std::size_t>(i)];
    layers.push_back({"Layer" + std::to_string(i + 1), "Conv", conv.in_channels(), conv.out_channels(),
                      conv.geometry().kernel, conv.geometry().stride, conv.geometry().padding, i > 0, "LeakyReLU", 0.0,
                      ""});
  }
  for (int j = 0; j < depth; ++j) {
    const auto& conv = decoder_[static_cast<std::size_t>(j)];
    const bool last = j == depth - 1;
    layers.push_back({"Layer" + std::to_string(depth + 1 + j), "DeConv", conv.in_channels(), conv.out_channels(),
                      conv.geometry().kernel, conv.geometry().stride, conv.geometry().padding, !last,
                      last ? "Tanh" : "ReLU", j < config_.dropout_layers ? config_.dropout_p : 0.0,
                      last ? "" : "Layer" + std::to_string(depth - 1 - j)});
  }
  return layers;
}

template <typename S>
std::vector<NamedParameter<S>> Generator<S>::parameters() const {
  std::vector<NamedParameter<S>> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    encoder_[i].collect("encoder." + std::to_string(i), out);
    if (i > 0) encoder_norms_[i - 1].collect("encoder." + std::to_string(i) + ".bn", out);
  }
  for (std::size_t j = 0; j < decoder_.size(); ++j) {
    decoder_[j].collect("decoder." + std::to_string(j), out);
    if (j < decoder_norms_.size()) decoder_norms_[j].collect("decoder." + std::to_string(j) + ".bn", out);
  }
  return out;
}

template <typename S>
std::vector<NamedBuffer<S>> Generator<S>::buffers() {
  std::vector<NamedBuffer<S>> out;
  for (std::size_t i = 0; i < encoder_norms_.size(); ++i)
    encoder_norms_[i].collect_buffers("encoder." + std::to_string(i + 1) + ".bn", out);
  for (std::size_t j = 0; j < decoder_norms_.size(); ++j)
    decoder_norms_[j].collect_buffers("decoder." + std::to_string(j) + ".bn", out);
  return out;
}

template <typename S>
void Generator<S>::reset_parameters(Rng& rng) {
  for (auto& c : encoder_) c.reset_parameters(rng);
  for (auto& c : decoder_) c.reset_parameters(rng);
  for (auto& n : encoder_norms_) n.reset_parameters();
  for (auto& n : decoder_norms_) n.reset_parameters();
}

// ---------------------------------------------------------------------------
// Critic

template <typename S>
Critic<S>::Critic(CriticConfig config) : config_(config), head_((config.validate(), config.flatten_features()), 1) {
  Index in = config_.in_channels;
  for (int i = 0; i < config_.conv_layers; ++i) {
    const Index out = config_.base_width << i;
    convs_.emplace_back(in, out, kDownUp, false);
    if (i > 0) norms_.emplace_back(out);
    in = out;
  }
}

template <typename S>
Variable<S> Critic<S>::forward(const Variable<S>& input, const ForwardContext& ctx, std::vector<Shape>* trace) {
  const Shape& shape = input.shape();
  if (shape[1] != config_.in_channels)
    throw ShapeError("critic expects " + std::to_string(config_.in_channels) + " channels, got " + to_string(shape));
  if (shape[2] != config_.face_size || shape[3] != config_.face_size)
    throw ShapeError("critic configured for " + std::to_string(config_.face_size) + "-pixel faces, got " + to_string(shape));
  const auto slope = static_cast<S>(config_.leaky_slope);
  Variable<S> x = input;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    x = convs_[i].forward(x);
    if (i > 0) x = norms_[i - 1].forward(x, ctx);
    x = leaky_relu(x, slope);
    push_trace(trace, x);
  }
  x = reshape(x, Shape{shape[0], config_.flatten_features(), 1, 1});
  x = head_.forward(x);
  push_trace(trace, x);
  return x;
}

template <typename S>
std::vector<LayerSpec> Critic<S>::describe() const {
  std::vector<LayerSpec> layers;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    const auto& c = convs_[i];
    layers.push_back({"Layer" + std::to_string(i + 1), "Conv", c.in_channels(), c.out_channels(), c.geometry().kernel,
                      c.geometry().stride, c.geometry().padding, i > 0, "LeakyReLU", 0.0, ""});
  }
  layers.push_back({"Layer" + std::to_string(convs_.size() + 1), "Linear", head_.in_features(), head_.out_features(), 0, 0,
                    0, false, "", 0.0, ""});
  return layers;
}

template <typename S>
std::vector<NamedParameter<S>> Critic<S>::parameters() const {
  std::vector<NamedParameter<S>> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i].collect("conv." + std::to_string(i), out);
    if (i > 0) norms_[i - 1].collect("conv." + std::to_string(i) + ".bn", out);
  }
  head_.collect("head", out);
  return out;
}

template <typename S>
std::vector<NamedBuffer<S>> Critic<S>::buffers() {
  std::vector<NamedBuffer<S>> out;
  for (std::size_t i = 0; i < norms_.size(); ++i) norms_[i].collect_buffers("conv." + std::to_string(i + 1) + ".bn", out);
  return out;
}

template <typename S>
void Critic<S>::reset_parameters(Rng& rng) {
  for (auto& c : convs_) c.reset_parameters(rng);
  for (auto& n : norms_) n.reset_parameters();
  head_.reset_parameters(rng);
}

// ---------------------------------------------------------------------------
// Cube-map helpers

template <typename S>
Variable<S> to_network_range(const Variable<S>& x) {
  return add_scalar(scale(x, S(2)), S(-1));
}

template <typename S>
Variable<S> from_network_range(const Variable<S>& x) {
  return scale(add_scalar(x, S(1)), S(0.5));
}

template <typename S>
Variable<S> generator_forward(Generator<S>& generator, const Tensor<S>& damaged, const Tensor<S>& masks,
                              const ForwardContext& ctx) {
  checked_panoramas(damaged.shape(), masks.shape());
  const auto [batch, channels, height, width] = damaged.shape();
  const Index plane = height * width;
  Tensor<S> input(Shape{batch, 4, height, width});
  for (Index b = 0; b < batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      auto src = Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>(damaged.data() + damaged.offset(b, c, 0, 0), plane);
      Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>(input.data() + input.offset(b, c, 0, 0), plane) = src * S(2) - S(1);
    }
    std::copy_n(masks.data() + masks.offset(b, 0, 0, 0), plane, input.data() + input.offset(b, 3, 0, 0));
  }
  return from_network_range(generator.forward(constant(std::move(input)), ctx));
}

template <typename S>
Tensor<S> expand_channels(const Tensor<S>& masks, Index channels) {
  if (masks.dim(1) != 1) throw ShapeError("expected single-channel masks, got " + to_string(masks.shape()));
  const auto [batch, one, height, width] = masks.shape();
  Tensor<S> out(Shape{batch, channels, height, width});
  const Index plane = height * width;
  for (Index b = 0; b < batch; ++b)
    for (Index c = 0; c < channels; ++c)
      std::copy_n(masks.data() + masks.offset(b, 0, 0, 0), plane, out.data() + out.offset(b, c, 0, 0));
  return out;
}

template <typename S>
Variable<S> composite(const Variable<S>& generated, const Tensor<S>& input, const Tensor<S>& masks) {
  require_same_shape(generated.shape(), input.shape(), "composite");
  if (masks.shape() != Shape{input.dim(0), 1, input.dim(2), input.dim(3)})
    throw ShapeError("composite: masks " + to_string(masks.shape()) + " do not match images " + to_string(input.shape()));
  const Tensor<S> keep = expand_channels(masks, input.dim(1));
  auto hole = std::make_shared<Tensor<S>>(keep.shape(), S(1) - keep.array());
  Tensor<S> kept(keep.shape(), keep.array() * input.array());
  return add(mul_const<S>(generated, hole), constant(std::move(kept)));
}

template <typename S>
Variable<S> stack_faces(const Variable<S>& faces) {
  if (faces.shape()[0] % kCubeFaces != 0 || faces.shape()[0] == 0)
    throw ShapeError("cube-map batch must hold a multiple of six faces, got " + to_string(faces.shape()));
  const Index n = faces.shape()[0] / kCubeFaces;
  std::vector<Variable<S>> parts;
  for (Index f = 0; f < kCubeFaces; ++f) parts.push_back(slice(faces, 0, f * n, n));
  return concat<S>(parts, 1);
}

template <typename S>
Variable<S> whole_critic_input_stacked(const Variable<S>& rgb, const Tensor<S>& masks) {
  const Shape& shape = rgb.shape();
  if (shape[1] != 3 * kCubeFaces || masks.shape() != Shape{shape[0], kCubeFaces, shape[2], shape[3]})
    throw ShapeError("whole critic input: rgb " + to_string(shape) + " with masks " + to_string(masks.shape()));
  const Variable<S> mask_var = constant(masks);
  std::vector<Variable<S>> parts;
  for (Index f = 0; f < kCubeFaces; ++f) {
    parts.push_back(slice(rgb, 1, 3 * f, 3));
    parts.push_back(slice(mask_var, 1, f, 1));
  }
  return concat<S>(parts, 1);
}

template <typename S>
Variable<S> whole_critic_input(const Variable<S>& faces, const Tensor<S>& masks) {
  checked_panoramas(faces.shape(), masks.shape());
  return whole_critic_input_stacked(stack_faces(faces), stack_faces(constant(masks)).value());
}

template <typename S>
Variable<S> whole_critic_forward(Critic<S>& critic, const Variable<S>& faces, const Tensor<S>& masks,
                                 const ForwardContext& ctx) {
  return critic.forward(whole_critic_input(faces, masks), ctx);
}

template <typename S>
Variable<S> slice_critic_forward(Critic<S>& critic, const Variable<S>& faces, const Tensor<S>& masks,
                                 const ForwardContext& ctx, std::vector<Variable<S>>* per_face) {
  const Index n = checked_panoramas(faces.shape(), masks.shape());
  std::vector<Variable<S>> scores;
  for (Index f = 0; f < kCubeFaces; ++f) {
    const std::vector<Variable<S>> parts{slice(faces, 0, f * n, n), constant(slice_batch(masks, f * n, n))};
    scores.push_back(critic.forward(concat<S>(parts, 1), ctx));
  }
  if (per_face != nullptr) *per_face = scores;
  return aggregate_face_scores<S>(scores);
}

template <typename S>
Variable<S> aggregate_face_scores(std::span<const Variable<S>> scores) {
  if (scores.size() != static_cast<std::size_t>(kCubeFaces))
    throw ValidationError("slice critic needs all six faces, got " + std::to_string(scores.size()));
  Variable<S> total = scores[0];
  for (std::size_t f = 1; f < scores.size(); ++f) total = add(total, scores[f]);
  return scale(total, S(1) / S(kCubeFaces));
}

#define PANO_INSTANTIATE(S)                                                                                        \
  template class Generator<S>;                                                                                     \
  template class Critic<S>;                                                                                        \
  template Variable<S> to_network_range(const Variable<S>&);                                                       \
  template Variable<S> from_network_range(const Variable<S>&);                                                     \
  template Variable<S> generator_forward(Generator<S>&, const Tensor<S>&, const Tensor<S>&, const ForwardContext&); \
  template Variable<S> composite(const Variable<S>&, const Tensor<S>&, const Tensor<S>&);                          \
  template Tensor<S> expand_channels(const Tensor<S>&, Index);                                                     \
  template Variable<S> stack_faces(const Variable<S>&);                                                            \
  template Variable<S> whole_critic_input_stacked(const Variable<S>&, const Tensor<S>&);                           \
  template Variable<S> whole_critic_input(const Variable<S>&, const Tensor<S>&);                                   \
  template Variable<S> whole_critic_forward(Critic<S>&, const Variable<S>&, const Tensor<S>&, const ForwardContext&); \
  template Variable<S> slice_critic_forward(Critic<S>&, const Variable<S>&, const Tensor<S>&, const ForwardContext&, \
                                            std::vector<Variable<S>>*);                                            \
  template Variable<S> aggregate_face_scores(std::span<const Variable<S>>);

PANO_INSTANTIATE(float)
PANO_INSTANTIATE(double)

#undef PANO_INSTANTIATE

}  // namespace pano
