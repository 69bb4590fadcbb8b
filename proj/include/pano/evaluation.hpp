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

// Image-quality metrics and dataset evaluation reports.
//
// Images are compared on the [0, 1] scale. L1 and L2 are reported on the
// 8-bit (0-255) scale. Hole-only variants restrict the comparison to pixels
// whose mask value is 0.

#include <limits>
#include <string>
#include <vector>

#include "pano/networks.hpp"
#include "pano/sample.hpp"

namespace pano {

/// PSNR reported for identical images.
inline constexpr double kPsnrCap = 99.0;

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

double psnr(const Image& a, const Image& b);
/// Mean of the SSIM map over all fully contained windows and channels.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});
/// Mean absolute difference, 0-255 scale.
double l1_distance(const Image& a, const Image& b);
/// Root-mean-square difference, 0-255 scale.
double l2_distance(const Image& a, const Image& b);

// Hole-only variants; `mask` is single-channel with 0 marking the hole.
// They return NaN when the mask has no hole pixel.
double psnr_hole(const Image& a, const Image& b, const Mask& mask);
/// SSIM map averaged over windows whose centre pixel lies in the hole.
double ssim_hole(const Image& a, const Image& b, const Mask& mask, const SsimOptions& options = {});
double l1_hole(const Image& a, const Image& b, const Mask& mask);
double l2_hole(const Image& a, const Image& b, const Mask& mask);

enum class MetricDomain { kEquirect, kCubemap };
const char* domain_name(MetricDomain domain);

struct MetricsRow {
  std::string image_id;
  double ssim = 0.0;
  double psnr = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double hole_ssim = 0.0;
  double hole_psnr = 0.0;
  double hole_l1 = 0.0;
  double hole_l2 = 0.0;
};

/// Per-column means over rows (image_id is "mean").
MetricsRow summarize(const std::vector<MetricsRow>& rows);

/// Produces an inpainted equirectangular panorama for a damaged sample.
class Inpainter {
 public:
  virtual ~Inpainter() = default;
  virtual Image inpaint(const TrainingSample& sample) const = 0;
};

/// Runs the generator in evaluation mode on the damaged faces, reprojects
/// the prediction, and keeps the valid pixels of the damaged equirect input.
Image inpaint_equirect(Generator<float>& generator, const Image& damaged, const Mask& mask, Index face_size,
                       float fill = kDefaultFill);

class GeneratorInpainter : public Inpainter {
 public:
  GeneratorInpainter(Generator<float>& generator, Index face_size, float fill = kDefaultFill)
      : generator_(&generator), face_size_(face_size), fill_(fill) {}
  Image inpaint(const TrainingSample& sample) const override;

 private:
  Generator<float>* generator_;
  Index face_size_;
  float fill_;
};

/// Returns the ground truth unchanged.
class IdentityInpainter : public Inpainter {
 public:
  Image inpaint(const TrainingSample& sample) const override { return sample.equirect; }
};

/// Leaves the hole at a constant gray.
class FillInpainter : public Inpainter {
 public:
  explicit FillInpainter(float fill = kDefaultFill) : fill_(fill) {}
  Image inpaint(const TrainingSample& sample) const override;

 private:
  float fill_;
};

struct EvaluationReport {
  MetricDomain domain = MetricDomain::kEquirect;
  std::vector<MetricsRow> rows;  // dataset order
  MetricsRow summary;
};

struct EvaluateOptions {
  MetricDomain domain = MetricDomain::kEquirect;
  Index face_size = 256;  // used for the cube-map domain
};

EvaluationReport evaluate(const Inpainter& inpainter, const SampleSource& dataset, const EvaluateOptions& options = {});

/// Per-image rows plus a "mean" row.
std::string format_metrics_csv(const EvaluationReport& report);
/// {"domain", "rows", "summary"}; the summary holds SSIM, PSNR, L1 and L2 means.
std::string format_metrics_json(const EvaluationReport& report);

/// Rows of (masked input | inpainted | ground truth), separated by `gap` white pixels.
Image comparison_grid(const std::vector<std::array<Image, 3>>& rows, Index gap = 4);

}  // namespace pano
