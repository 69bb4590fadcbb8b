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

#include <random>

#include "pano/image.hpp"
#include "pano/projection.hpp"

namespace pano {

using Rng = std::mt19937_64;

/// Mid-gray, i.e. zero in the networks' [-1, 1] range.
inline constexpr float kDefaultFill = 0.5f;

/// Axis-aligned hole, top-left corner plus extent, in pixels.
struct RectSpec {
  Index x0 = 0;
  Index y0 = 0;
  Index width = 0;
  Index height = 0;

  friend bool operator==(const RectSpec&, const RectSpec&) = default;
};

/// Inclusive hole-size limits for a w x h image: [ceil(w/4), floor(w/2)] by [ceil(h/4), floor(h/2)].
struct HoleBounds {
  Index min_width;
  Index max_width;
  Index min_height;
  Index max_height;
};

HoleBounds hole_bounds(Index width, Index height);

struct RectMask {
  Mask mask;
  RectSpec rect;
};

/// Draws a hole size uniformly within `hole_bounds` and a position uniformly
/// among placements fully inside the image. 0 inside the hole, 1 elsewhere.
RectMask sample_rect_mask(Rng& rng, Index width, Index height);

/// Rasterises `rect`; throws ValidationError if it leaves the image.
Mask rect_mask(Index width, Index height, const RectSpec& rect);

/// mask * img + (1 - mask) * fill, with the mask broadcast over channels.
Image apply_mask(const Image& img, const Mask& mask, float fill = kDefaultFill);

/// Face-wise apply_mask.
CubeMap apply_mask(const CubeMap& cube, const CubeMask& masks, float fill = kDefaultFill);

}  // namespace pano
