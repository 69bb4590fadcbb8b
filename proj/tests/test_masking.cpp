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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "pano/dataset.hpp"
#include "pano/masking.hpp"

using namespace pano;

namespace {

Index holes(const Mask& m) { return (m.array() == 0.0f).count(); }

}  // namespace

TEST_CASE("hole size bounds") {
  const HoleBounds b = hole_bounds(512, 256);
  CHECK(b.min_width == 128);
  CHECK(b.max_width == 256);
  CHECK(b.min_height == 64);
  CHECK(b.max_height == 128);
  const HoleBounds odd = hole_bounds(10, 9);
  CHECK(odd.min_width == 3);
  CHECK(odd.max_width == 5);
  CHECK(odd.min_height == 3);
  CHECK(odd.max_height == 4);
  CHECK_THROWS_AS(hole_bounds(6, 16), ConfigError);
}

TEST_CASE("sampled rectangles respect the bounds and stay inside the image") {
  Rng rng(42);
  std::set<Index> widths, heights;
  for (int i = 0; i < 10000; ++i) {
    const RectMask m = sample_rect_mask(rng, 512, 256);
    const RectSpec& r = m.rect;
    REQUIRE(r.width >= 128);
    REQUIRE(r.width <= 256);
    REQUIRE(r.height >= 64);
    REQUIRE(r.height <= 128);
    REQUIRE(r.x0 >= 0);
    REQUIRE(r.y0 >= 0);
    REQUIRE(r.x0 + r.width <= 512);
    REQUIRE(r.y0 + r.height <= 256);
    widths.insert(r.width);
    heights.insert(r.height);
    if (i < 50) {
      CHECK(is_binary(m.mask));
      CHECK(holes(m.mask) == r.width * r.height);
      CHECK(m.mask(r.x0, r.y0) == 0.0f);
      CHECK(m.mask(r.x0 + r.width - 1, r.y0 + r.height - 1) == 0.0f);
    }
  }
  // Both extremes of the inclusive ranges are reachable.
  CHECK(*widths.begin() == 128);
  CHECK(*widths.rbegin() == 256);
  CHECK(*heights.begin() == 64);
  CHECK(*heights.rbegin() == 128);
}

TEST_CASE("mask sampling is deterministic per seed") {
  Rng a(9), b(9), c(10);
  const RectMask ma = sample_rect_mask(a, 512, 256);
  CHECK(ma.rect == sample_rect_mask(b, 512, 256).rect);
  CHECK_FALSE(ma.rect == sample_rect_mask(c, 512, 256).rect);
}

TEST_CASE("explicit rectangles") {
  const Mask m = rect_mask(16, 8, RectSpec{2, 1, 4, 3});
  CHECK(holes(m) == 12);
  CHECK(m(2, 1) == 0.0f);
  CHECK(m(6, 1) == 1.0f);
  CHECK_THROWS_AS(rect_mask(16, 8, RectSpec{14, 0, 4, 2}), ValidationError);
  CHECK(holes(rect_mask(16, 8, RectSpec{0, 0, 0, 2})) == 0);
  CHECK_THROWS_AS(rect_mask(16, 8, RectSpec{-1, 0, 2, 2}), ValidationError);
}

TEST_CASE("apply_mask fills holes and keeps valid pixels exactly") {
  Image img(8, 4, 3);
  for (Index i = 0; i < img.size(); ++i) img.array()[i] = static_cast<float>(i % 7) / 7.0f;
  const Mask m = rect_mask(8, 4, RectSpec{1, 1, 3, 2});
  const Image out = apply_mask(img, m, 0.5f);
  for (Index y = 0; y < 4; ++y)
    for (Index x = 0; x < 8; ++x)
      for (Index c = 0; c < 3; ++c) CHECK(out(x, y, c) == (m(x, y) == 0.0f ? 0.5f : img(x, y, c)));
  Mask soft = m;
  soft(0, 0) = 0.3f;
  CHECK_THROWS_AS(apply_mask(img, soft), ValidationError);
  CHECK_THROWS_AS(apply_mask(img, Mask(4, 4, 1, 1.0f)), ValidationError);
}

TEST_CASE("a rectangle centred at a quarter turn straddles the F and R faces") {
  // theta = pi / 4 is pixel column 5W/8 - 1/2.
  const Index w = 512, h = 256;
  const RectSpec r{320 - 64, 128 - 32, 128, 64};
  const CubeMask faces = mask_to_cubemap(rect_mask(w, h, r), 64);
  CHECK(holes(faces[Face::F]) > 0);
  CHECK(holes(faces[Face::R]) > 0);
  CHECK(holes(faces[Face::B]) == 0);
  CHECK(holes(faces[Face::L]) == 0);
  // Symmetric about the shared edge.
  CHECK(std::abs(holes(faces[Face::F]) - holes(faces[Face::R])) <= 64);
}

TEST_CASE("a rectangle over the top rows reaches the T face") {
  const CubeMask faces = mask_to_cubemap(rect_mask(512, 256, RectSpec{0, 0, 256, 64}), 64);
  CHECK(holes(faces[Face::T]) > 0);
  CHECK(holes(faces[Face::D]) == 0);
}

TEST_CASE("samples built from one equirect rectangle") {
  const PreprocessOptions opt{32, 64, 0.5f};
  const Image pano = synthetic_panorama(128, 64, 3);
  const TrainingSample s = preprocess_image("p", pano, opt, 11);
  Rng rng(11);
  CHECK(s.rect == sample_rect_mask(rng, 128, 64).rect);
  const CubeMask expected = mask_to_cubemap(s.equirect_mask, 32);
  for (int f = 0; f < 6; ++f) {
    CHECK(s.masks.faces[f] == expected.faces[f]);
    CHECK(s.damaged.faces[f] == apply_mask(s.truth.faces[f], s.masks.faces[f], 0.5f));
  }
  const TrainingSample again = preprocess_image("p", pano, opt, 11);
  CHECK(again.damaged.faces[0] == s.damaged.faces[0]);
}
