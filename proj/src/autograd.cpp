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

#include "pano/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace pano {

std::string to_string(const Shape& s) {
  std::ostringstream out;
  out << '[' << s[0] << ", " << s[1] << ", " << s[2] << ", " << s[3] << ']';
  return out.str();
}

namespace {

thread_local bool g_grad_enabled = true;

template <typename S>
using Vars = std::vector<Variable<S>>;

template <typename S>
Variable<S> record(Tensor<S> value, Vars<S> parents, typename Node<S>::Backward backward, const char* op) {
  auto node = std::make_shared<Node<S>>();
  node->value = std::move(value);
  node->op = op;
  if (g_grad_enabled && std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p.requires_grad(); })) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Variable<S>(std::move(node));
}

// Output nodes referenced from their own backward rule are held weakly.
template <typename S>
std::weak_ptr<Node<S>> weak_of(const Variable<S>& v) {
  return v.weak();
}

// Splits a shape around `axis` into (outer, extent, inner).
struct AxisSplit {
  Index outer;
  Index extent;
  Index inner;
};

AxisSplit split_axis(const Shape& s, int axis) {
  if (axis < 0 || axis > 3) throw PreconditionError("axis out of range");
  AxisSplit r{1, s[static_cast<std::size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) r.outer *= s[static_cast<std::size_t>(i)];
  for (int i = axis + 1; i < 4; ++i) r.inner *= s[static_cast<std::size_t>(i)];
  return r;
}

// Rows are (c, ky, kx); columns are (n, oy, ox).
// Output columns [lo, hi) whose input column ox * stride - padding + kx lies inside [0, extent).
struct ValidRange {
  Index lo;
  Index hi;
};

ValidRange valid_range(Index kx, Index extent, Index out, const ConvGeometry& g) {
  const Index first = g.padding - kx;  // ox * stride >= first
  const Index last = extent - 1 + g.padding - kx;  // ox * stride <= last
  Index lo = first <= 0 ? 0 : (first + g.stride - 1) / g.stride;
  Index hi = last < 0 ? 0 : last / g.stride + 1;
  lo = std::min(lo, out);
  hi = std::clamp(hi, lo, out);
  return {lo, hi};
}

template <typename S>
RowMatrix<S> im2col(const Tensor<S>& x, const ConvGeometry& g, Index out_h, Index out_w) {
  const auto [n_batch, channels, height, width] = x.shape();
  const Index k = g.kernel;
  const Index plane = out_h * out_w;
  RowMatrix<S> cols(channels * k * k, n_batch * plane);
  for (Index c = 0; c < channels; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const ValidRange xs = valid_range(kx, width, out_w, g);
        S* row = cols.row((c * k + ky) * k + kx).data();
        for (Index n = 0; n < n_batch; ++n) {
          const S* src = x.data() + x.offset(n, c, 0, 0);
          for (Index oy = 0; oy < out_h; ++oy) {
            S* dst = row + n * plane + oy * out_w;
            const Index iy = oy * g.stride - g.padding + ky;
            if (iy < 0 || iy >= height) {
              std::fill_n(dst, out_w, S(0));
              continue;
            }
            std::fill(dst, dst + xs.lo, S(0));
            std::fill(dst + xs.hi, dst + out_w, S(0));
            const S* line = src + iy * width - g.padding + kx;
            for (Index ox = xs.lo; ox < xs.hi; ++ox) dst[ox] = line[ox * g.stride];
          }
        }
      }
    }
  }
  return cols;
}

template <typename S>
void col2im(const RowMatrix<S>& cols, const ConvGeometry& g, Index out_h, Index out_w, Tensor<S>& x) {
  const auto [n_batch, channels, height, width] = x.shape();
  const Index k = g.kernel;
  const Index plane = out_h * out_w;
  for (Index c = 0; c < channels; ++c) {
    for (Index ky = 0; ky < k; ++ky) {
      for (Index kx = 0; kx < k; ++kx) {
        const ValidRange xs = valid_range(kx, width, out_w, g);
        const S* row = cols.row((c * k + ky) * k + kx).data();
        for (Index n = 0; n < n_batch; ++n) {
          S* dst = x.data() + x.offset(n, c, 0, 0);
          for (Index oy = 0; oy < out_h; ++oy) {
            const Index iy = oy * g.stride - g.padding + ky;
            if (iy < 0 || iy >= height) continue;
            const S* src = row + n * plane + oy * out_w;
            S* line = dst + iy * width - g.padding + kx;
            for (Index ox = xs.lo; ox < xs.hi; ++ox) line[ox * g.stride] += src[ox];
          }
        }
      }
    }
  }
}

// [N, C, H, W] <-> [C, N*H*W]
template <typename S>
RowMatrix<S> channels_major(const Tensor<S>& t) {
  const auto [n_batch, channels, height, width] = t.shape();
  const Index plane = height * width;
  RowMatrix<S> m(channels, n_batch * plane);
  for (Index n = 0; n < n_batch; ++n)
    for (Index c = 0; c < channels; ++c)
      std::copy_n(t.data() + t.offset(n, c, 0, 0), plane, m.row(c).data() + n * plane);
  return m;
}

template <typename S>
Tensor<S> from_channels_major(const RowMatrix<S>& m, const Shape& shape) {
  Tensor<S> t(shape);
  const Index plane = shape[2] * shape[3];
  for (Index n = 0; n < shape[0]; ++n)
    for (Index c = 0; c < shape[1]; ++c)
      std::copy_n(m.row(c).data() + n * plane, plane, t.data() + t.offset(n, c, 0, 0));
  return t;
}

template <typename S>
Eigen::Map<const RowMatrix<S>> weight_matrix(const Tensor<S>& w) {
  return {w.data(), w.dim(0), w.dim(1) * w.dim(2) * w.dim(3)};
}

void check_kernel(const Shape& w, const ConvGeometry& g, const char* op) {
  if (w[2] != g.kernel || w[3] != g.kernel)
    throw ShapeError(std::string(op) + ": weight " + to_string(w) + " does not match kernel " + std::to_string(g.kernel));
}

}  // namespace

template <typename S>
S Variable<S>::item() const {
  if (value().size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return value().array()[0];
}

bool grad_enabled() { return g_grad_enabled; }

GradModeGuard::GradModeGuard(bool enabled) : previous_(g_grad_enabled) { g_grad_enabled = enabled; }
GradModeGuard::~GradModeGuard() { g_grad_enabled = previous_; }

template <typename S>
std::vector<Variable<S>> grad(const Variable<S>& output, std::span<const Variable<S>> inputs, bool create_graph) {
  if (output.value().size() != 1) throw ShapeError("grad() needs a single-element output, got " + to_string(output.shape()));
  std::vector<Variable<S>> result;
  result.reserve(inputs.size());
  if (!output.requires_grad()) {
    for (const auto& in : inputs) result.emplace_back(Tensor<S>(in.shape()));
    return result;
  }

  // Post-order DFS over nodes that require gradients.
  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> seen;
  std::vector<std::pair<Node<S>*, std::size_t>> stack{{output.node(), 0}};
  seen.insert(output.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<S>* parent = node->parents[next++].node();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_set<Node<S>*> wanted;
  for (const auto& in : inputs) wanted.insert(in.node());

  GradModeGuard mode(create_graph);
  std::unordered_map<Node<S>*, Variable<S>> grads;
  grads.emplace(output.node(), Variable<S>(Tensor<S>(output.shape(), S(1))));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* node = *it;
    auto found = grads.find(node);
    if (found == grads.end()) continue;
    const Variable<S> g = found->second;
    if (!wanted.count(node)) grads.erase(found);
    if (!node->backward) continue;
    std::vector<Variable<S>> parent_grads = node->backward(g);
    for (std::size_t i = 0; i < node->parents.size(); ++i) {
      const auto& parent = node->parents[i];
      if (!parent.requires_grad() || !parent_grads[i].defined()) continue;
      auto [slot, inserted] = grads.try_emplace(parent.node(), parent_grads[i]);
      if (!inserted) slot->second = add(slot->second, parent_grads[i]);
    }
  }

  for (const auto& in : inputs) {
    auto found = grads.find(in.node());
    result.push_back(found != grads.end() ? found->second : Variable<S>(Tensor<S>(in.shape())));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Elementwise

template <typename S>
Variable<S> add(const Variable<S>& a, const Variable<S>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  Tensor<S> out(a.shape(), a.value().array() + b.value().array());
  return record<S>(std::move(out), {a, b}, [](const Variable<S>& g) { return Vars<S>{g, g}; }, "add");
}

template <typename S>
Variable<S> sub(const Variable<S>& a, const Variable<S>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  Tensor<S> out(a.shape(), a.value().array() - b.value().array());
  return record<S>(std::move(out), {a, b}, [](const Variable<S>& g) { return Vars<S>{g, scale(g, S(-1))}; }, "sub");
}

template <typename S>
Variable<S> mul(const Variable<S>& a, const Variable<S>& b) {
  require_same_shape(a.shape(), b.shape(), "mul");
  Tensor<S> out(a.shape(), a.value().array() * b.value().array());
  return record<S>(std::move(out), {a, b}, [a, b](const Variable<S>& g) { return Vars<S>{mul(g, b), mul(g, a)}; }, "mul");
}

template <typename S>
Variable<S> scale(const Variable<S>& a, S factor) {
  Tensor<S> out(a.shape(), a.value().array() * factor);
  return record<S>(std::move(out), {a}, [factor](const Variable<S>& g) { return Vars<S>{scale(g, factor)}; }, "scale");
}

template <typename S>
Variable<S> add_scalar(const Variable<S>& a, S offset) {
  Tensor<S> out(a.shape(), a.value().array() + offset);
  return record<S>(std::move(out), {a}, [](const Variable<S>& g) { return Vars<S>{g}; }, "add_scalar");
}

template <typename S>
Variable<S> mul_const(const Variable<S>& a, std::shared_ptr<const Tensor<S>> factor) {
  require_same_shape(a.shape(), factor->shape(), "mul_const");
  Tensor<S> out(a.shape(), a.value().array() * factor->array());
  return record<S>(std::move(out), {a}, [factor](const Variable<S>& g) { return Vars<S>{mul_const(g, factor)}; },
                   "mul_const");
}

template <typename S>
Variable<S> square(const Variable<S>& a) {
  Tensor<S> out(a.shape(), a.value().array().square());
  return record<S>(std::move(out), {a}, [a](const Variable<S>& g) { return Vars<S>{mul(g, scale(a, S(2)))}; }, "square");
}

template <typename S>
Variable<S> tanh(const Variable<S>& a) {
  auto out = record<S>(Tensor<S>(a.shape(), a.value().array().tanh()), {a}, {}, "tanh");
  if (out.requires_grad()) {
    auto self = weak_of(out);
    out.node()->backward = [self](const Variable<S>& g) {
      Variable<S> y(self.lock());
      return Vars<S>{mul(g, add_scalar(scale(square(y), S(-1)), S(1)))};
    };
  }
  return out;
}

template <typename S>
Variable<S> leaky_relu(const Variable<S>& a, S slope) {
  auto factor = std::make_shared<Tensor<S>>(a.shape());
  factor->array() = (a.value().array() > S(0)).select(S(1), Eigen::Array<S, Eigen::Dynamic, 1>::Constant(a.value().size(), slope));
  return mul_const<S>(a, factor);
}

template <typename S>
Variable<S> relu(const Variable<S>& a) {
  auto factor = std::make_shared<Tensor<S>>(a.shape());
  factor->array() = (a.value().array() > S(0)).template cast<S>();
  return mul_const<S>(a, factor);
}

template <typename S>
Variable<S> rsqrt(const Variable<S>& a, S eps) {
  auto out = record<S>(Tensor<S>(a.shape(), (a.value().array() + eps).rsqrt()), {a}, {}, "rsqrt");
  if (out.requires_grad()) {
    auto self = weak_of(out);
    out.node()->backward = [self](const Variable<S>& g) {
      Variable<S> y(self.lock());
      return Vars<S>{mul(g, scale(mul(square(y), y), S(-0.5)))};
    };
  }
  return out;
}

template <typename S>
Variable<S> sqrt(const Variable<S>& a) {
  Tensor<S> out(a.shape(), a.value().array().max(S(0)).sqrt());
  auto factor = std::make_shared<Tensor<S>>(a.shape());
  factor->array() = (out.array() > S(0)).select(S(0.5) / out.array(), S(0));
  return record<S>(std::move(out), {a}, [factor](const Variable<S>& g) { return Vars<S>{mul_const<S>(g, factor)}; },
                   "sqrt");
}

// ---------------------------------------------------------------------------
// Reductions

template <typename S>
Variable<S> sum(const Variable<S>& a) {
  Tensor<S> out(Shape{1, 1, 1, 1}, a.value().array().sum());
  const Shape shape = a.shape();
  return record<S>(std::move(out), {a}, [shape](const Variable<S>& g) { return Vars<S>{broadcast_all(g, shape)}; }, "sum");
}

template <typename S>
Variable<S> mean(const Variable<S>& a) {
  if (a.value().size() == 0) throw ValidationError("mean of empty tensor");
  return scale(sum(a), S(1) / static_cast<S>(a.value().size()));
}

template <typename S>
Variable<S> broadcast_all(const Variable<S>& a, const Shape& shape) {
  if (a.value().size() != 1) throw ShapeError("broadcast_all expects a single element");
  Tensor<S> out(shape, a.value().array()[0]);
  return record<S>(std::move(out), {a}, [](const Variable<S>& g) { return Vars<S>{sum(g)}; }, "broadcast_all");
}

template <typename S>
Variable<S> channel_sum(const Variable<S>& a) {
  const Shape shape = a.shape();
  Tensor<S> out(Shape{1, shape[1], 1, 1});
  const Index plane = shape[2] * shape[3];
  for (Index n = 0; n < shape[0]; ++n)
    for (Index c = 0; c < shape[1]; ++c)
      out.array()[c] += Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>(a.value().data() + a.value().offset(n, c, 0, 0), plane).sum();
  return record<S>(std::move(out), {a}, [shape](const Variable<S>& g) { return Vars<S>{broadcast_channel(g, shape)}; },
                   "channel_sum");
}

template <typename S>
Variable<S> broadcast_channel(const Variable<S>& a, const Shape& shape) {
  if (a.shape() != Shape{1, shape[1], 1, 1}) throw ShapeError("broadcast_channel: " + to_string(a.shape()) + " to " + to_string(shape));
  Tensor<S> out(shape);
  const Index plane = shape[2] * shape[3];
  for (Index n = 0; n < shape[0]; ++n)
    for (Index c = 0; c < shape[1]; ++c)
      std::fill_n(out.data() + out.offset(n, c, 0, 0), plane, a.value().array()[c]);
  return record<S>(std::move(out), {a}, [](const Variable<S>& g) { return Vars<S>{channel_sum(g)}; }, "broadcast_channel");
}

template <typename S>
Variable<S> sample_sum(const Variable<S>& a) {
  const Shape shape = a.shape();
  Tensor<S> out(Shape{shape[0], 1, 1, 1}, a.value().matrix().rowwise().sum().array().eval());
  return record<S>(std::move(out), {a}, [shape](const Variable<S>& g) { return Vars<S>{broadcast_sample(g, shape)}; },
                   "sample_sum");
}

template <typename S>
Variable<S> broadcast_sample(const Variable<S>& a, const Shape& shape) {
  if (a.shape() != Shape{shape[0], 1, 1, 1}) throw ShapeError("broadcast_sample: " + to_string(a.shape()) + " to " + to_string(shape));
  Tensor<S> out(shape);
  out.matrix().colwise() = a.value().array().matrix();
  return record<S>(std::move(out), {a}, [](const Variable<S>& g) { return Vars<S>{sample_sum(g)}; }, "broadcast_sample");
}

// ---------------------------------------------------------------------------
// Layout

template <typename S>
Variable<S> reshape(const Variable<S>& a, const Shape& shape) {
  const Shape original = a.shape();
  return record<S>(a.value().reshaped(shape), {a},
                   [original](const Variable<S>& g) { return Vars<S>{reshape(g, original)}; }, "reshape");
}

template <typename S>
Variable<S> concat(std::span<const Variable<S>> parts, int axis) {
  if (parts.empty()) throw PreconditionError("concat of nothing");
  if (axis != 0 && axis != 1) throw PreconditionError("concat supports axis 0 or 1");
  Shape shape = parts.front().shape();
  Index total = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    s[static_cast<std::size_t>(axis)] = shape[static_cast<std::size_t>(axis)];
    require_same_shape(s, shape, "concat");
    total += p.shape()[static_cast<std::size_t>(axis)];
  }
  shape[static_cast<std::size_t>(axis)] = total;
  Tensor<S> out(shape);
  const AxisSplit dst = split_axis(shape, axis);
  Index start = 0;
  std::vector<Index> starts;
  for (const auto& p : parts) {
    const AxisSplit src = split_axis(p.shape(), axis);
    for (Index o = 0; o < src.outer; ++o)
      std::copy_n(p.value().data() + o * src.extent * src.inner, src.extent * src.inner,
                  out.data() + (o * dst.extent + start) * dst.inner);
    starts.push_back(start);
    start += src.extent;
  }
  Vars<S> parents(parts.begin(), parts.end());
  std::vector<Index> counts;
  for (const auto& p : parts) counts.push_back(p.shape()[static_cast<std::size_t>(axis)]);
  return record<S>(std::move(out), std::move(parents),
                   [axis, starts, counts](const Variable<S>& g) {
                     Vars<S> grads;
                     for (std::size_t i = 0; i < starts.size(); ++i) grads.push_back(slice(g, axis, starts[i], counts[i]));
                     return grads;
                   },
                   "concat");
}

template <typename S>
Variable<S> slice(const Variable<S>& a, int axis, Index start, Index count) {
  const AxisSplit src = split_axis(a.shape(), axis);
  if (start < 0 || count < 0 || start + count > src.extent) throw ShapeError("slice out of range on " + to_string(a.shape()));
  Shape shape = a.shape();
  shape[static_cast<std::size_t>(axis)] = count;
  Tensor<S> out(shape);
  for (Index o = 0; o < src.outer; ++o)
    std::copy_n(a.value().data() + (o * src.extent + start) * src.inner, count * src.inner,
                out.data() + o * count * src.inner);
  const Index total = src.extent;
  return record<S>(std::move(out), {a},
                   [axis, total, start](const Variable<S>& g) { return Vars<S>{embed(g, axis, total, start)}; }, "slice");
}

template <typename S>
Variable<S> embed(const Variable<S>& a, int axis, Index total, Index start) {
  const AxisSplit src = split_axis(a.shape(), axis);
  if (start < 0 || start + src.extent > total) throw ShapeError("embed out of range");
  Shape shape = a.shape();
  shape[static_cast<std::size_t>(axis)] = total;
  Tensor<S> out(shape);
  for (Index o = 0; o < src.outer; ++o)
    std::copy_n(a.value().data() + o * src.extent * src.inner, src.extent * src.inner,
                out.data() + (o * total + start) * src.inner);
  const Index count = src.extent;
  return record<S>(std::move(out), {a},
                   [axis, start, count](const Variable<S>& g) { return Vars<S>{slice(g, axis, start, count)}; }, "embed");
}

// ---------------------------------------------------------------------------
// Linear algebra

template <typename S>
Variable<S> matmul(const Variable<S>& a, const Variable<S>& b, bool transpose_a, bool transpose_b) {
  const auto am = a.value().matrix();
  const auto bm = b.value().matrix();
  RowMatrix<S> c;
  if (!transpose_a && !transpose_b) {
    if (am.cols() != bm.rows()) throw ShapeError("matmul inner dimensions differ");
    c.noalias() = am * bm;
  } else if (transpose_a && !transpose_b) {
    if (am.rows() != bm.rows()) throw ShapeError("matmul inner dimensions differ");
    c.noalias() = am.transpose() * bm;
  } else if (!transpose_a && transpose_b) {
    if (am.cols() != bm.cols()) throw ShapeError("matmul inner dimensions differ");
    c.noalias() = am * bm.transpose();
  } else {
    if (am.rows() != bm.cols()) throw ShapeError("matmul inner dimensions differ");
    c.noalias() = am.transpose() * bm.transpose();
  }
  Tensor<S> out(Shape{c.rows(), c.cols(), 1, 1});
  out.matrix() = c;
  const Shape a_shape = a.shape();
  const Shape b_shape = b.shape();
  return record<S>(
      std::move(out), {a, b},
      [a, b, transpose_a, transpose_b, a_shape, b_shape](const Variable<S>& g) {
        Variable<S> ga = transpose_a ? matmul(b, g, transpose_b, true) : matmul(g, b, false, !transpose_b);
        Variable<S> gb = transpose_b ? matmul(g, a, true, transpose_a) : matmul(a, g, !transpose_a, false);
        return Vars<S>{reshape(ga, a_shape), reshape(gb, b_shape)};
      },
      "matmul");
}

// ---------------------------------------------------------------------------
// Convolution family

template <typename S>
Variable<S> conv2d(const Variable<S>& x, const Variable<S>& w, const ConvGeometry& g) {
  check_kernel(w.shape(), g, "conv2d");
  if (x.shape()[1] != w.shape()[1])
    throw ShapeError("conv2d: input " + to_string(x.shape()) + " incompatible with weight " + to_string(w.shape()));
  const Index out_h = g.output_extent(x.shape()[2]);
  const Index out_w = g.output_extent(x.shape()[3]);
  if (out_h < 1 || out_w < 1) throw ShapeError("conv2d: input " + to_string(x.shape()) + " too small");
  RowMatrix<S> y;
  y.noalias() = weight_matrix(w.value()) * im2col(x.value(), g, out_h, out_w);
  Tensor<S> out = from_channels_major<S>(y, Shape{x.shape()[0], w.shape()[0], out_h, out_w});
  const Index in_h = x.shape()[2];
  const Index in_w = x.shape()[3];
  return record<S>(std::move(out), {x, w},
                   [x, w, g, in_h, in_w](const Variable<S>& grad_out) {
                     return Vars<S>{conv2d_transpose(grad_out, w, g, in_h, in_w), conv2d_weight(x, grad_out, g)};
                   },
                   "conv2d");
}

template <typename S>
Variable<S> conv2d_transpose(const Variable<S>& y, const Variable<S>& w, const ConvGeometry& g, Index out_h, Index out_w) {
  check_kernel(w.shape(), g, "conv2d_transpose");
  if (y.shape()[1] != w.shape()[0])
    throw ShapeError("conv2d_transpose: input " + to_string(y.shape()) + " incompatible with weight " + to_string(w.shape()));
  if (g.output_extent(out_h) != y.shape()[2] || g.output_extent(out_w) != y.shape()[3])
    throw ShapeError("conv2d_transpose: output extent inconsistent with geometry");
  RowMatrix<S> cols;
  cols.noalias() = weight_matrix(w.value()).transpose() * channels_major(y.value());
  Tensor<S> out(Shape{y.shape()[0], w.shape()[1], out_h, out_w});
  col2im<S>(cols, g, y.shape()[2], y.shape()[3], out);
  return record<S>(std::move(out), {y, w},
                   [y, w, g](const Variable<S>& grad_out) {
                     return Vars<S>{conv2d(grad_out, w, g), conv2d_weight(grad_out, y, g)};
                   },
                   "conv2d_transpose");
}

template <typename S>
Variable<S> conv2d_weight(const Variable<S>& x, const Variable<S>& dy, const ConvGeometry& g) {
  const Index out_h = dy.shape()[2];
  const Index out_w = dy.shape()[3];
  if (x.shape()[0] != dy.shape()[0] || g.output_extent(x.shape()[2]) != out_h || g.output_extent(x.shape()[3]) != out_w)
    throw ShapeError("conv2d_weight: " + to_string(x.shape()) + " vs " + to_string(dy.shape()));
  RowMatrix<S> gw;
  gw.noalias() = channels_major(dy.value()) * im2col(x.value(), g, out_h, out_w).transpose();
  Tensor<S> out(Shape{dy.shape()[1], x.shape()[1], g.kernel, g.kernel});
  out.matrix() = Eigen::Map<const RowMatrix<S>>(gw.data(), out.dim(0), gw.size() / out.dim(0));
  const Index in_h = x.shape()[2];
  const Index in_w = x.shape()[3];
  return record<S>(std::move(out), {x, dy},
                   [x, dy, g, in_h, in_w](const Variable<S>& grad_out) {
                     return Vars<S>{conv2d_transpose(dy, grad_out, g, in_h, in_w), conv2d(x, grad_out, g)};
                   },
                   "conv2d_weight");
}

#define PANO_INSTANTIATE(S)                                                                                      \
  template class Variable<S>;                                                                                    \
  template std::vector<Variable<S>> grad(const Variable<S>&, std::span<const Variable<S>>, bool);               \
  template Variable<S> add(const Variable<S>&, const Variable<S>&);                                              \
  template Variable<S> sub(const Variable<S>&, const Variable<S>&);                                              \
  template Variable<S> mul(const Variable<S>&, const Variable<S>&);                                              \
  template Variable<S> scale(const Variable<S>&, S);                                                             \
  template Variable<S> add_scalar(const Variable<S>&, S);                                                        \
  template Variable<S> mul_const(const Variable<S>&, std::shared_ptr<const Tensor<S>>);                          \
  template Variable<S> square(const Variable<S>&);                                                               \
  template Variable<S> tanh(const Variable<S>&);                                                                 \
  template Variable<S> leaky_relu(const Variable<S>&, S);                                                        \
  template Variable<S> relu(const Variable<S>&);                                                                 \
  template Variable<S> rsqrt(const Variable<S>&, S);                                                             \
  template Variable<S> sqrt(const Variable<S>&);                                                                 \
  template Variable<S> sum(const Variable<S>&);                                                                  \
  template Variable<S> mean(const Variable<S>&);                                                                 \
  template Variable<S> broadcast_all(const Variable<S>&, const Shape&);                                          \
  template Variable<S> channel_sum(const Variable<S>&);                                                          \
  template Variable<S> broadcast_channel(const Variable<S>&, const Shape&);                                      \
  template Variable<S> sample_sum(const Variable<S>&);                                                           \
  template Variable<S> broadcast_sample(const Variable<S>&, const Shape&);                                       \
  template Variable<S> reshape(const Variable<S>&, const Shape&);                                                \
  template Variable<S> concat(std::span<const Variable<S>>, int);                                                \
  template Variable<S> slice(const Variable<S>&, int, Index, Index);                                             \
  template Variable<S> embed(const Variable<S>&, int, Index, Index);                                             \
  template Variable<S> matmul(const Variable<S>&, const Variable<S>&, bool, bool);                               \
  template Variable<S> conv2d(const Variable<S>&, const Variable<S>&, const ConvGeometry&);                      \
  template Variable<S> conv2d_transpose(const Variable<S>&, const Variable<S>&, const ConvGeometry&, Index, Index); \
  template Variable<S> conv2d_weight(const Variable<S>&, const Variable<S>&, const ConvGeometry&);

PANO_INSTANTIATE(float)
PANO_INSTANTIATE(double)

#undef PANO_INSTANTIATE

}  // namespace pano
