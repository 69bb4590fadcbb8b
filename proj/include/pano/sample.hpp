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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pano/masking.hpp"
#include "pano/projection.hpp"
#include "pano/tensor.hpp"

namespace pano {

/// One preprocessed panorama ready for training or evaluation.
struct TrainingSample {
  std::string image_id;
  Image equirect;      // resized ground truth, W = 2H
  Mask equirect_mask;  // the sampled rectangle in equirectangular space
  RectSpec rect;
  CubeMap truth;
  CubeMask masks;      // mask_to_cubemap(equirect_mask)
  CubeMap damaged;     // apply_mask(truth, masks, fill)
};

/// Random-access provider of training samples.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::size_t size() const = 0;
  virtual TrainingSample load(std::size_t index) const = 0;
};

class InMemorySource : public SampleSource {
 public:
  explicit InMemorySource(std::vector<TrainingSample> samples) : samples_(std::move(samples)) {}
  std::size_t size() const override { return samples_.size(); }
  TrainingSample load(std::size_t index) const override { return samples_.at(index); }
  const std::vector<TrainingSample>& samples() const { return samples_; }

 private:
  std::vector<TrainingSample> samples_;
};

/// Face-major network batch: entry f * N + n is face f of sample n.
template <typename S>
struct CubeBatch {
  Tensor<S> truth;    // [6N, 3, S, S]
  Tensor<S> damaged;  // [6N, 3, S, S]
  Tensor<S> masks;    // [6N, 1, S, S]

  Index panoramas() const { return truth.dim(0) / 6; }
};

template <typename S>
CubeBatch<S> make_batch(std::span<const TrainingSample> samples);

/// Face-major tensor [6N, C, S, S] from N cube maps.
template <typename S>
Tensor<S> cubes_to_tensor(std::span<const CubeMap* const> cubes);

/// Inverse of cubes_to_tensor for panorama `n`.
template <typename S>
CubeMap tensor_to_cube(const Tensor<S>& faces, Index n);

}  // namespace pano
