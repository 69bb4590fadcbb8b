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

#include <string>

#include "pano/errors.hpp"

namespace pano {

using Index = Eigen::Index;

/// Interleaved H x W x C raster.
template <typename S>
class ImageT {
 public:
  using Scalar = S;
  using Storage = Eigen::Array<S, Eigen::Dynamic, 1>;

  ImageT() = default;
  ImageT(Index width, Index height, Index channels, S fill = S(0))
      : width_(width), height_(height), channels_(channels), data_(Storage::Constant(width * height * channels, fill)) {
    if (width < 0 || height < 0 || channels < 1) throw PreconditionError("invalid image dimensions");
  }

  Index width() const { return width_; }
  Index height() const { return height_; }
  Index channels() const { return channels_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }
  bool same_shape(const ImageT& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  S& operator()(Index x, Index y, Index c = 0) { return data_[(y * width_ + x) * channels_ + c]; }
  S operator()(Index x, Index y, Index c = 0) const { return data_[(y * width_ + x) * channels_ + c]; }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  template <typename T>
  ImageT<T> cast() const {
    ImageT<T> out(width_, height_, channels_);
    out.array() = data_.template cast<T>();
    return out;
  }

  friend bool operator==(const ImageT& a, const ImageT& b) {
    return a.same_shape(b) && (a.data_ == b.data_).all();
  }

 private:
  Index width_ = 0;
  Index height_ = 0;
  Index channels_ = 1;
  Storage data_;
};

using Image = ImageT<float>;

/// Single-channel map, 1 = valid pixel, 0 = hole.
using Mask = ImageT<float>;

inline bool is_binary(const Mask& m) {
  return m.channels() == 1 && ((m.array() == 0.0f) || (m.array() == 1.0f)).all();
}

inline void require_binary(const Mask& m, const char* what) {
  if (!is_binary(m)) throw ValidationError(std::string(what) + ": mask must be single-channel with values in {0, 1}");
}

inline void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b))
    throw ValidationError(std::string(what) + ": image shapes differ (" + std::to_string(a.width()) + "x" +
                          std::to_string(a.height()) + "x" + std::to_string(a.channels()) + " vs " +
                          std::to_string(b.width()) + "x" + std::to_string(b.height()) + "x" +
                          std::to_string(b.channels()) + ")");
}

}  // namespace pano
