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

// Reverse-mode automatic differentiation over NCHW tensors.
//
// Every operator's backward rule is itself written in terms of recorded
// operators, so gradients can be differentiated again. The gradient penalty
// relies on this: it differentiates a critic's input gradient with respect to
// the critic's parameters.

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pano/tensor.hpp"

namespace pano {

template <typename Scalar>
class Variable;

template <typename Scalar>
struct Node {
  using Backward = std::function<std::vector<Variable<Scalar>>(const Variable<Scalar>&)>;

  Tensor<Scalar> value;
  bool requires_grad = false;
  std::vector<Variable<Scalar>> parents;
  Backward backward;  // empty for leaves
  const char* op = "leaf";
};

/// Shared handle to a node of the computation graph.
template <typename Scalar>
class Variable {
 public:
  Variable() = default;
  explicit Variable(Tensor<Scalar> value, bool requires_grad = false)
      : node_(std::make_shared<Node<Scalar>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }
  explicit Variable(std::shared_ptr<Node<Scalar>> node) : node_(std::move(node)) {}

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<Scalar>& value() const { return node_->value; }
  /// In-place access for optimizers. Never use on a node that has consumers.
  Tensor<Scalar>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool is_leaf() const { return !node_->backward; }
  Node<Scalar>* node() const { return node_.get(); }
  const char* op() const { return node_->op; }

  std::weak_ptr<Node<Scalar>> weak() const { return node_; }

  /// Same value, cut from the graph.
  Variable detach() const { return Variable(node_->value, false); }

  /// Value of a single-element tensor.
  Scalar item() const;

 private:
  std::shared_ptr<Node<Scalar>> node_;
};

/// Whether new operations are recorded for differentiation (thread-local).
bool grad_enabled();

/// RAII switch for gradient recording.
class GradModeGuard {
 public:
  explicit GradModeGuard(bool enabled);
  ~GradModeGuard();
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  bool previous_;
};

struct NoGradGuard : GradModeGuard {
  NoGradGuard() : GradModeGuard(false) {}
};

/// Gradients of the single-element `output` with respect to each of `inputs`.
///
/// With `create_graph` the returned gradients are themselves differentiable.
/// Inputs that `output` does not depend on receive zero tensors.
template <typename Scalar>
std::vector<Variable<Scalar>> grad(const Variable<Scalar>& output, std::span<const Variable<Scalar>> inputs,
                                   bool create_graph = false);

/// Convolution geometry for square kernels.
struct ConvGeometry {
  Index kernel = 4;
  Index stride = 2;
  Index padding = 1;

  Index output_extent(Index input) const { return (input + 2 * padding - kernel) / stride + 1; }
  Index input_extent(Index output) const { return (output - 1) * stride - 2 * padding + kernel; }
};

// Elementwise.
template <typename S> Variable<S> add(const Variable<S>& a, const Variable<S>& b);
template <typename S> Variable<S> sub(const Variable<S>& a, const Variable<S>& b);
template <typename S> Variable<S> mul(const Variable<S>& a, const Variable<S>& b);
template <typename S> Variable<S> scale(const Variable<S>& a, S factor);
template <typename S> Variable<S> add_scalar(const Variable<S>& a, S offset);
/// a * factor where `factor` is a constant of the same shape.
template <typename S> Variable<S> mul_const(const Variable<S>& a, std::shared_ptr<const Tensor<S>> factor);
template <typename S> Variable<S> square(const Variable<S>& a);
template <typename S> Variable<S> tanh(const Variable<S>& a);
template <typename S> Variable<S> leaky_relu(const Variable<S>& a, S slope);
template <typename S> Variable<S> relu(const Variable<S>& a);
/// (a + eps)^(-1/2)
template <typename S> Variable<S> rsqrt(const Variable<S>& a, S eps);
/// sqrt(a). Differentiable once; the derivative at 0 is taken as 0.
template <typename S> Variable<S> sqrt(const Variable<S>& a);

// Reductions and broadcasts. Reduced axes keep extent 1.
template <typename S> Variable<S> sum(const Variable<S>& a);
template <typename S> Variable<S> mean(const Variable<S>& a);
template <typename S> Variable<S> broadcast_all(const Variable<S>& a, const Shape& shape);
/// Sum over N, H, W leaving [1, C, 1, 1].
template <typename S> Variable<S> channel_sum(const Variable<S>& a);
template <typename S> Variable<S> broadcast_channel(const Variable<S>& a, const Shape& shape);
/// Sum over C, H, W leaving [N, 1, 1, 1].
template <typename S> Variable<S> sample_sum(const Variable<S>& a);
template <typename S> Variable<S> broadcast_sample(const Variable<S>& a, const Shape& shape);

// Layout.
template <typename S> Variable<S> reshape(const Variable<S>& a, const Shape& shape);
/// Concatenate along axis 0 (batch) or 1 (channel).
template <typename S> Variable<S> concat(std::span<const Variable<S>> parts, int axis);
template <typename S> Variable<S> slice(const Variable<S>& a, int axis, Index start, Index count);
/// Place `a` at [start, start + a.dim(axis)) of a zero tensor with `total` extent on `axis`.
template <typename S> Variable<S> embed(const Variable<S>& a, int axis, Index total, Index start);

// Linear algebra. Operands are viewed as (dim0) x (rest) matrices; the result is [rows, cols, 1, 1].
template <typename S> Variable<S> matmul(const Variable<S>& a, const Variable<S>& b, bool transpose_a, bool transpose_b);

// Convolution family. All three share the weight layout [C_out, C_in, k, k] of
// the forward convolution they are derived from.
template <typename S> Variable<S> conv2d(const Variable<S>& x, const Variable<S>& w, const ConvGeometry& g);
/// Adjoint of conv2d in x: maps [N, C_out, Ho, Wo] to [N, C_in, out_h, out_w].
template <typename S>
Variable<S> conv2d_transpose(const Variable<S>& y, const Variable<S>& w, const ConvGeometry& g, Index out_h, Index out_w);
/// Adjoint of conv2d in w: correlates x [N, C_in, H, W] with dy [N, C_out, Ho, Wo].
template <typename S> Variable<S> conv2d_weight(const Variable<S>& x, const Variable<S>& dy, const ConvGeometry& g);

template <typename S>
Variable<S> constant(Tensor<S> value) {
  return Variable<S>(std::move(value), false);
}

template <typename S>
Variable<S> operator+(const Variable<S>& a, const Variable<S>& b) { return add(a, b); }
template <typename S>
Variable<S> operator-(const Variable<S>& a, const Variable<S>& b) { return sub(a, b); }
template <typename S>
Variable<S> operator*(const Variable<S>& a, const Variable<S>& b) { return mul(a, b); }

}  // namespace pano
