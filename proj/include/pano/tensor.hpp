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

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>

#include "pano/errors.hpp"

namespace pano {

using Index = Eigen::Index;

/// Tensor extents in NCHW order. Lower-rank data uses trailing ones.
using Shape = std::array<Index, 4>;

inline Index shape_size(const Shape& s) { return s[0] * s[1] * s[2] * s[3]; }

std::string to_string(const Shape& s);

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense NCHW tensor with contiguous row-major storage.
template <typename Scalar>
class Tensor {
 public:
  using Storage = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Tensor() : shape_{0, 0, 0, 0} {}
  explicit Tensor(const Shape& shape) : shape_(shape), data_(Storage::Zero(shape_size(shape))) {}
  Tensor(const Shape& shape, Scalar fill) : shape_(shape), data_(Storage::Constant(shape_size(shape), fill)) {}
  Tensor(const Shape& shape, Storage data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) throw ShapeError("tensor storage does not match shape " + to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  Index dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Index offset(Index n, Index c, Index h, Index w) const {
    return ((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
  }
  Scalar& operator()(Index n, Index c, Index h, Index w) { return data_[offset(n, c, h, w)]; }
  Scalar operator()(Index n, Index c, Index h, Index w) const { return data_[offset(n, c, h, w)]; }

  /// View as a (dim0) x (rest) row-major matrix.
  Eigen::Map<RowMatrix<Scalar>> matrix() { return {data_.data(), shape_[0], shape_size(shape_) / std::max<Index>(shape_[0], 1)}; }
  Eigen::Map<const RowMatrix<Scalar>> matrix() const {
    return {data_.data(), shape_[0], shape_size(shape_) / std::max<Index>(shape_[0], 1)};
  }

  Tensor reshaped(const Shape& shape) const {
    if (shape_size(shape) != size()) throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    return Tensor(shape, data_);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  Shape shape_;
  Storage data_;
};

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

}  // namespace pano
