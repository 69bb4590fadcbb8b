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

#include "pano/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <random>

namespace pano {

namespace {

struct Tap {
  Index index;
  double weight;
};

// Overlap weights between output cell i ([i, i+1) * ratio in source units) and source pixels.
std::vector<std::vector<Tap>> area_taps(Index src, Index dst) {
  std::vector<std::vector<Tap>> taps(dst);
  const double ratio = static_cast<double>(src) / dst;
  for (Index i = 0; i < dst; ++i) {
    const double lo = i * ratio;
    const double hi = (i + 1) * ratio;
    double total = 0.0;
    for (Index s = static_cast<Index>(std::floor(lo)); s < std::min<Index>(src, static_cast<Index>(std::ceil(hi))); ++s) {
      const double w = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      if (w > 1e-12) {
        taps[i].push_back({s, w});
        total += w;
      }
    }
    for (auto& t : taps[i]) t.weight /= total;
  }
  return taps;
}

}  // namespace

Image resize_area(const Image& img, Index width, Index height) {
  if (img.empty()) throw ValidationError("resize_area: empty image");
  if (width < 1 || height < 1) throw ConfigError("resize_area: target size must be positive");
  if (width == img.width() && height == img.height()) return img;
  const Index c = img.channels();
  const auto tx = area_taps(img.width(), width);
  const auto ty = area_taps(img.height(), height);

  std::vector<double> rows(static_cast<std::size_t>(width * img.height() * c), 0.0);
  for (Index y = 0; y < img.height(); ++y)
    for (Index x = 0; x < width; ++x)
      for (const Tap& t : tx[x])
        for (Index k = 0; k < c; ++k) rows[(y * width + x) * c + k] += t.weight * img(t.index, y, k);

  Image out(width, height, c);
  for (Index y = 0; y < height; ++y)
    for (Index x = 0; x < width; ++x)
      for (Index k = 0; k < c; ++k) {
        double acc = 0.0;
        for (const Tap& t : ty[y]) acc += t.weight * rows[(t.index * width + x) * c + k];
        out(x, y, k) = static_cast<float>(acc);
      }
  return out;
}

TrainingSample preprocess_with_mask(const std::string& image_id, const Image& img, const Mask& mask,
                                    const PreprocessOptions& options) {
  const Index h = options.equirect_height;
  const Image equirect = resize_area(img, 2 * h, h);
  if (mask.width() != 2 * h || mask.height() != h)
    throw ValidationError("mask must be " + std::to_string(2 * h) + "x" + std::to_string(h));
  require_binary(mask, "preprocess");
  TrainingSample s;
  s.image_id = image_id;
  s.equirect = equirect;
  s.equirect_mask = mask;
  s.truth = equirect_to_cubemap(equirect, options.face_size);
  s.masks = mask_to_cubemap(mask, options.face_size);
  s.damaged = apply_mask(s.truth, s.masks, options.fill);
  return s;
}

TrainingSample preprocess_image(const std::string& image_id, const Image& img, const PreprocessOptions& options,
                                std::uint64_t seed) {
  if (img.channels() != 3) throw ValidationError("preprocess: expected an RGB image");
  Rng rng(seed);
  const RectMask hole = sample_rect_mask(rng, 2 * options.equirect_height, options.equirect_height);
  TrainingSample s = preprocess_with_mask(image_id, img, hole.mask, options);
  s.rect = hole.rect;
  return s;
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Image synthetic_panorama(Index width, Index height, std::uint64_t seed) {
  // Sum of low-frequency plane waves evaluated on the unit sphere.
  constexpr int kWaves = 4;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  struct Wave {
    Direction axis;
    double frequency;
    double phase;
    Eigen::Vector3d amplitude;
  };
  std::vector<Wave> waves;
  Eigen::Vector3d base;
  for (int c = 0; c < 3; ++c) base[c] = 0.3 + 0.4 * uniform(rng);
  for (int i = 0; i < kWaves; ++i) {
    Wave w;
    w.axis = Direction(normal(rng), normal(rng), normal(rng)).normalized();
    w.frequency = 1.0 + 2.0 * uniform(rng);
    w.phase = 2.0 * M_PI * uniform(rng);
    for (int c = 0; c < 3; ++c) w.amplitude[c] = 0.15 * (2.0 * uniform(rng) - 1.0);
    waves.push_back(w);
  }
  Image img(width, height, 3);
  for (Index y = 0; y < height; ++y)
    for (Index x = 0; x < width; ++x) {
      const Direction d = pixel_to_direction(width, height, x, y);
      Eigen::Vector3d rgb = base;
      for (const Wave& w : waves) rgb += w.amplitude * std::sin(w.frequency * w.axis.dot(d) * M_PI + w.phase);
      for (int c = 0; c < 3; ++c) img(x, y, c) = static_cast<float>(std::clamp(rgb[c], 0.0, 1.0));
    }
  return img;
}

std::vector<TrainingSample> synthetic_dataset(std::size_t count, const PreprocessOptions& options, std::uint64_t seed) {
  std::vector<TrainingSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synthetic_%03zu", i);
    const std::uint64_t s = sample_seed(seed, i);
    const Image pano = synthetic_panorama(2 * options.equirect_height, options.equirect_height, s);
    out.push_back(preprocess_image(id, pano, options, s));
  }
  return out;
}

}  // namespace pano
