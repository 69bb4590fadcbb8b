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

#include "pano/sample.hpp"

namespace pano {

template <typename S>
Tensor<S> cubes_to_tensor(std::span<const CubeMap* const> cubes) {
  if (cubes.empty()) throw ValidationError("empty batch");
  const Index n = static_cast<Index>(cubes.size());
  const Index size = cubes[0]->face_size();
  const Index channels = cubes[0]->faces[0].channels();
  Tensor<S> out(Shape{6 * n, channels, size, size});
  for (Index i = 0; i < n; ++i) {
    const CubeMap& cube = *cubes[static_cast<std::size_t>(i)];
    cube.validate();
    if (cube.face_size() != size || cube.faces[0].channels() != channels)
      throw ValidationError("all cube maps in a batch must share face size and channels");
    for (Index f = 0; f < 6; ++f) {
      const Image& face = cube.faces[static_cast<std::size_t>(f)];
      for (Index c = 0; c < channels; ++c)
        for (Index y = 0; y < size; ++y)
          for (Index x = 0; x < size; ++x) out(f * n + i, c, y, x) = static_cast<S>(face(x, y, c));
    }
  }
  return out;
}

template <typename S>
CubeMap tensor_to_cube(const Tensor<S>& faces, Index n) {
  const Index count = faces.dim(0) / 6;
  if (faces.dim(0) % 6 != 0 || n < 0 || n >= count) throw ShapeError("no panorama " + std::to_string(n) + " in " + to_string(faces.shape()));
  const Index size = faces.dim(2);
  const Index channels = faces.dim(1);
  CubeMap cube;
  for (Index f = 0; f < 6; ++f) {
    Image face(size, size, channels);
    for (Index c = 0; c < channels; ++c)
      for (Index y = 0; y < size; ++y)
        for (Index x = 0; x < size; ++x) face(x, y, c) = static_cast<float>(faces(f * count + n, c, y, x));
    cube.faces[static_cast<std::size_t>(f)] = std::move(face);
  }
  return cube;
}

template <typename S>
CubeBatch<S> make_batch(std::span<const TrainingSample> samples) {
  std::vector<const CubeMap*> truth;
  std::vector<const CubeMap*> damaged;
  std::vector<const CubeMap*> masks;
  for (const auto& s : samples) {
    truth.push_back(&s.truth);
    damaged.push_back(&s.damaged);
    masks.push_back(&s.masks);
    for (const auto& m : s.masks.faces) require_binary(m, "training sample");
  }
  CubeBatch<S> batch{cubes_to_tensor<S>(truth), cubes_to_tensor<S>(damaged), cubes_to_tensor<S>(masks)};
  if (batch.truth.shape() != batch.damaged.shape() || batch.masks.dim(1) != 1 || batch.truth.dim(1) != 3)
    throw ValidationError("training samples must hold RGB faces and single-channel masks of one size");
  return batch;
}

template Tensor<float> cubes_to_tensor(std::span<const CubeMap* const>);
template Tensor<double> cubes_to_tensor(std::span<const CubeMap* const>);
template CubeMap tensor_to_cube(const Tensor<float>&, Index);
template CubeMap tensor_to_cube(const Tensor<double>&, Index);
template CubeBatch<float> make_batch(std::span<const TrainingSample>);
template CubeBatch<double> make_batch(std::span<const TrainingSample>);

}  // namespace pano
