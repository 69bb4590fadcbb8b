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

#include "pano/layers.hpp"

namespace pano {

namespace {

template <typename S>
void fill_normal(Tensor<S>& t, Rng& rng, double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  for (Index i = 0; i < t.size(); ++i) t.array()[i] = static_cast<S>(dist(rng));
}

}  // namespace

template <typename S>
Conv2d<S>::Conv2d(Index in_channels, Index out_channels, ConvGeometry geometry, bool transposed)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      geometry_(geometry),
      transposed_(transposed),
      // Transposed layers store the weight of the convolution they invert.
      weight_(Tensor<S>(transposed ? Shape{in_channels, out_channels, geometry.kernel, geometry.kernel}
                                   : Shape{out_channels, in_channels, geometry.kernel, geometry.kernel}),
              true),
      bias_(Tensor<S>(Shape{1, out_channels, 1, 1}), true) {}

template <typename S>
Shape Conv2d<S>::output_shape(const Shape& input) const {
  if (input[1] != in_channels_)
    throw ShapeError("layer expects " + std::to_string(in_channels_) + " channels, got " + to_string(input));
  if (transposed_)
    return {input[0], out_channels_, geometry_.input_extent(input[2]), geometry_.input_extent(input[3])};
  return {input[0], out_channels_, geometry_.output_extent(input[2]), geometry_.output_extent(input[3])};
}

template <typename S>
Variable<S> Conv2d<S>::forward(const Variable<S>& x) const {
  const Shape out = output_shape(x.shape());
  Variable<S> y = transposed_ ? conv2d_transpose(x, weight_, geometry_, out[2], out[3]) : conv2d(x, weight_, geometry_);
  return add(y, broadcast_channel(bias_, y.shape()));
}

template <typename S>
void Conv2d<S>::reset_parameters(Rng& rng) {
  Variable<S> w = weight_;
  fill_normal(w.mutable_value(), rng, 0.0, 0.02);
  Variable<S> b = bias_;
  b.mutable_value().array().setZero();
}

template <typename S>
void Conv2d<S>::collect(const std::string& prefix, std::vector<NamedParameter<S>>& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

template <typename S>
BatchNorm2d<S>::BatchNorm2d(Index channels, S momentum, S eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(Tensor<S>(Shape{1, channels, 1, 1}, S(1)), true),
      beta_(Tensor<S>(Shape{1, channels, 1, 1}), true),
      running_mean_(Shape{1, channels, 1, 1}),
      running_var_(Shape{1, channels, 1, 1}, S(1)) {}

template <typename S>
Variable<S> BatchNorm2d<S>::forward(const Variable<S>& x, const ForwardContext& ctx) {
  const Shape& shape = x.shape();
  if (shape[1] != channels_) throw ShapeError("batch norm expects " + std::to_string(channels_) + " channels, got " + to_string(shape));
  Variable<S> normalized;
  if (ctx.mode == Mode::kTrain) {
    const Index count = shape[0] * shape[2] * shape[3];
    if (count < 2) throw ShapeError("batch norm in training mode needs more than one value per channel");
    const S inv_count = S(1) / static_cast<S>(count);
    Variable<S> mu = scale(channel_sum(x), inv_count);
    Variable<S> centered = sub(x, broadcast_channel(mu, shape));
    Variable<S> var = scale(channel_sum(square(centered)), inv_count);
    normalized = mul(centered, broadcast_channel(rsqrt(var, eps_), shape));
    if (ctx.update_running_stats) {
      const S unbias = static_cast<S>(count) / static_cast<S>(count - 1);
      running_mean_.array() = (S(1) - momentum_) * running_mean_.array() + momentum_ * mu.value().array();
      running_var_.array() = (S(1) - momentum_) * running_var_.array() + momentum_ * unbias * var.value().array();
    }
  } else {
    Variable<S> mu = constant(running_mean_);
    Tensor<S> inv(running_var_.shape(), (running_var_.array() + eps_).rsqrt());
    normalized = mul(sub(x, broadcast_channel(mu, shape)), broadcast_channel(constant(std::move(inv)), shape));
  }
  return add(mul(normalized, broadcast_channel(gamma_, shape)), broadcast_channel(beta_, shape));
}

template <typename S>
void BatchNorm2d<S>::reset_parameters() {
  Variable<S> g = gamma_;
  g.mutable_value().array().setOnes();
  Variable<S> b = beta_;
  b.mutable_value().array().setZero();
  running_mean_.array().setZero();
  running_var_.array().setOnes();
}

template <typename S>
void BatchNorm2d<S>::collect(const std::string& prefix, std::vector<NamedParameter<S>>& out) const {
  out.push_back({prefix + ".gamma", gamma_});
  out.push_back({prefix + ".beta", beta_});
}

template <typename S>
void BatchNorm2d<S>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<S>>& out) {
  out.push_back({prefix + ".running_mean", &running_mean_});
  out.push_back({prefix + ".running_var", &running_var_});
}

template <typename S>
Linear<S>::Linear(Index in_features, Index out_features)
    : in_features_(in_features),
      out_features_(out_features),
      weight_(Tensor<S>(Shape{out_features, in_features, 1, 1}), true),
      bias_(Tensor<S>(Shape{1, out_features, 1, 1}), true) {}

template <typename S>
Variable<S> Linear<S>::forward(const Variable<S>& x) const {
  const Index features = x.shape()[1] * x.shape()[2] * x.shape()[3];
  if (features != in_features_)
    throw ShapeError("linear layer expects " + std::to_string(in_features_) + " features, got " + to_string(x.shape()));
  Variable<S> y = matmul(x, weight_, false, true);
  y = reshape(y, Shape{x.shape()[0], out_features_, 1, 1});
  return add(y, broadcast_channel(bias_, y.shape()));
}

template <typename S>
void Linear<S>::reset_parameters(Rng& rng) {
  Variable<S> w = weight_;
  fill_normal(w.mutable_value(), rng, 0.0, 0.02);
  Variable<S> b = bias_;
  b.mutable_value().array().setZero();
}

template <typename S>
void Linear<S>::collect(const std::string& prefix, std::vector<NamedParameter<S>>& out) const {
  out.push_back({prefix + ".weight", weight_});
  out.push_back({prefix + ".bias", bias_});
}

template <typename S>
Variable<S> dropout(const Variable<S>& x, double p, const ForwardContext& ctx) {
  if (ctx.mode != Mode::kTrain || p <= 0.0) return x;
  if (ctx.dropout_rng == nullptr) throw PreconditionError("dropout in training mode needs a random source");
  std::bernoulli_distribution keep(1.0 - p);
  auto factor = std::make_shared<Tensor<S>>(x.shape());
  const S kept = static_cast<S>(1.0 / (1.0 - p));
  for (Index i = 0; i < factor->size(); ++i) factor->array()[i] = keep(*ctx.dropout_rng) ? kept : S(0);
  return mul_const<S>(x, factor);
}

template class Conv2d<float>;
template class Conv2d<double>;
template class BatchNorm2d<float>;
template class BatchNorm2d<double>;
template class Linear<float>;
template class Linear<double>;
template Variable<float> dropout(const Variable<float>&, double, const ForwardContext&);
template Variable<double> dropout(const Variable<double>&, double, const ForwardContext&);

}  // namespace pano
