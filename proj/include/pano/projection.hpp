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

// Equirectangular <-> cube-map resampling.
//
// Sphere convention: x right, y down, z forward. A pixel (x, y) of a W x H
// equirectangular image has longitude theta = 2 pi (x + 0.5) / W - pi and
// latitude phi = pi (y + 0.5) / H - pi / 2, and looks along
// (cos phi sin theta, sin phi, cos phi cos theta). The top row looks up
// (negative y), and theta = 0 is the centre of face F.
//
// Each face is a pinhole view with u to the right and v downwards:
//   F (+z): ( a,  b,  1)    R (+x): ( 1,  b, -a)    B (-z): (-a,  b, -1)
//   L (-x): (-1,  b,  a)    T (-y): ( a, -1,  b)    D (+y): ( a,  1, -b)
// with a = 2u - 1 and b = 2v - 1. T's bottom edge and D's top edge meet F.

#include <Eigen/Core>

#include <array>
#include <string_view>

#include "pano/image.hpp"

namespace pano {

enum class Face : int { F = 0, R, B, L, T, D };

inline constexpr std::array<Face, 6> kFaceOrder{Face::F, Face::R, Face::B, Face::L, Face::T, Face::D};

char face_letter(Face f);

using Direction = Eigen::Vector3d;

struct FaceCoord {
  Face face = Face::F;
  double u = 0.0;  // [0, 1), rightwards
  double v = 0.0;  // [0, 1), downwards
};

enum class Filter { kBilinear, kNearest };

/// Six square faces in F, R, B, L, T, D order.
template <typename S>
struct CubeMapT {
  std::array<ImageT<S>, 6> faces;

  Index face_size() const { return faces[0].width(); }
  ImageT<S>& operator[](Face f) { return faces[static_cast<std::size_t>(f)]; }
  const ImageT<S>& operator[](Face f) const { return faces[static_cast<std::size_t>(f)]; }
  void validate() const;
};

using CubeMap = CubeMapT<float>;
using CubeMask = CubeMapT<float>;

/// Throws unless W == 2H and values are in [0, 1].
void validate_equirect(const Image& img);

/// Direction through the centre of pixel (x, y).
Direction pixel_to_direction(Index width, Index height, Index x, Index y);

/// Direction at continuous pixel coordinates (pixel centres at integers).
Direction equirect_to_direction(Index width, Index height, double x, double y);

/// Continuous equirectangular pixel coordinates (pixel centres at integers).
Eigen::Vector2d direction_to_equirect(const Direction& d, Index width, Index height);

/// Face by largest-magnitude component; ties go to the earlier face in F, R, B, L, T, D.
FaceCoord direction_to_face_uv(const Direction& d);

/// Unit direction through (u, v) of `face`.
Direction face_uv_to_direction(Face face, double u, double v);

/// Bilinear sample with horizontal wrap and vertical clamp.
template <typename S>
S sample_equirect(const ImageT<S>& img, double x, double y, Index channel, Filter filter);

CubeMap equirect_to_cubemap(const Image& img, Index face_size, Filter filter = Filter::kBilinear);

Image cubemap_to_equirect(const CubeMap& cube, Index width, Index height, Filter filter = Filter::kBilinear);

/// Nearest-neighbour reprojection of a binary equirectangular mask.
CubeMask mask_to_cubemap(const Mask& mask, Index face_size);

/// Nearest-neighbour reprojection of binary face masks to an equirectangular mask.
Mask cubemask_to_equirect(const CubeMask& cube, Index width, Index height);

/// Horizontal 6-tile strip (6S x S) in F, R, B, L, T, D order.
Image cubemap_to_strip(const CubeMap& cube);
CubeMap strip_to_cubemap(const Image& strip);

}  // namespace pano
