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

#include "pano/masking.hpp"

namespace pano {

HoleBounds hole_bounds(Index width, Index height) {
  if (width < 8 || height < 8)
    throw ConfigError("images smaller than 8x8 cannot host a training hole (got " + std::to_string(width) + "x" +
                      std::to_string(height) + ")");
  return {(width + 3) / 4, width / 2, (height + 3) / 4, height / 2};
}

RectMask sample_rect_mask(Rng& rng, Index width, Index height) {
  const HoleBounds b = hole_bounds(width, height);
  RectSpec rect;
  rect.width = std::uniform_int_distribution<Index>(b.min_width, b.max_width)(rng);
  rect.height = std::uniform_int_distribution<Index>(b.min_height, b.max_height)(rng);
  rect.x0 = std::uniform_int_distribution<Index>(0, width - rect.width)(rng);
  rect.y0 = std::uniform_int_distribution<Index>(0, height - rect.height)(rng);
  return {rect_mask(width, height, rect), rect};
}

Mask rect_mask(Index width, Index height, const RectSpec& rect) {
  if (rect.x0 < 0 || rect.y0 < 0 || rect.width < 0 || rect.height < 0 || rect.x0 + rect.width > width ||
      rect.y0 + rect.height > height)
    throw ValidationError("hole rectangle does not fit inside the image");
  Mask mask(width, height, 1, 1.0f);
  for (Index y = rect.y0; y < rect.y0 + rect.height; ++y)
    for (Index x = rect.x0; x < rect.x0 + rect.width; ++x) mask(x, y) = 0.0f;
  return mask;
}

Image apply_mask(const Image& img, const Mask& mask, float fill) {
  if (mask.width() != img.width() || mask.height() != img.height())
    throw ValidationError("apply_mask: mask and image sizes differ");
  require_binary(mask, "apply_mask");
  Image out(img.width(), img.height(), img.channels());
  for (Index y = 0; y < img.height(); ++y)
    for (Index x = 0; x < img.width(); ++x) {
      const bool valid = mask(x, y) != 0.0f;
      for (Index c = 0; c < img.channels(); ++c) out(x, y, c) = valid ? img(x, y, c) : fill;
    }
  return out;
}

CubeMap apply_mask(const CubeMap& cube, const CubeMask& masks, float fill) {
  CubeMap out;
  for (std::size_t f = 0; f < 6; ++f) out.faces[f] = apply_mask(cube.faces[f], masks.faces[f], fill);
  return out;
}

}  // namespace pano
