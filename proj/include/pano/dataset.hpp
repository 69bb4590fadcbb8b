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

// Preprocessing from decoded panoramas to training samples, plus a synthetic
// panorama source for tests and desk-scale runs.

#include <cstdint>
#include <string>
#include <vector>

#include "pano/sample.hpp"

namespace pano {

struct PreprocessOptions {
  Index face_size = 256;
  Index equirect_height = 256;  // resized to 2H x H
  float fill = kDefaultFill;
};

/// Area-averaging resize. Each output pixel is the overlap-weighted mean of
/// the source pixels under its footprint.
Image resize_area(const Image& img, Index width, Index height);

/// resize -> equirect_to_cubemap -> seeded rectangle mask -> mask_to_cubemap -> apply_mask.
TrainingSample preprocess_image(const std::string& image_id, const Image& img, const PreprocessOptions& options,
                                std::uint64_t seed);

/// As above with an explicit equirect mask (1 = valid) at the resized resolution.
TrainingSample preprocess_with_mask(const std::string& image_id, const Image& img, const Mask& mask,
                                    const PreprocessOptions& options);

/// Per-image mask seed derived from a run seed and the image's dataset index.
std::uint64_t sample_seed(std::uint64_t seed, std::size_t index);

/// Smooth RGB panorama, continuous across the horizontal wrap and the poles.
Image synthetic_panorama(Index width, Index height, std::uint64_t seed);

/// `count` synthetic panoramas preprocessed with per-image seeds.
std::vector<TrainingSample> synthetic_dataset(std::size_t count, const PreprocessOptions& options, std::uint64_t seed);

}  // namespace pano
