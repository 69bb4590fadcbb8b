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

#include <cmath>
#include <random>

#include "pano/dataset.hpp"
#include "pano/evaluation.hpp"

using namespace pano;

namespace {

Image random_image(Index w, Index h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h, 3);
  for (Index i = 0; i < img.size(); ++i) img.array()[i] = u(rng);
  return img;
}

Image add_noise(const Image& img, float amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Image out = img;
  for (Index i = 0; i < out.size(); ++i) out.array()[i] = std::clamp(img.array()[i] + amplitude * u(rng), 0.0f, 1.0f);
  return out;
}

// Brute-force SSIM: a full 2D Gaussian window evaluated at every valid position.
double ssim_oracle(const Image& a, const Image& b) {
  const int k = 11;
  double g[k][k], total = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) total += g[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double sum = 0.0, count = 0.0;
  for (Index c = 0; c < a.channels(); ++c)
    for (Index y = 0; y + k <= a.height(); ++y)
      for (Index x = 0; x + k <= a.width(); ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double w = g[i][j] / total, va = a(x + j, y + i, c), vb = b(x + j, y + i, c);
            ma += w * va;
            mb += w * vb;
          }
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const double w = g[i][j] / total, va = a(x + j, y + i, c) - ma, vb = b(x + j, y + i, c) - mb;
            saa += w * va * va;
            sbb += w * vb * vb;
            sab += w * va * vb;
          }
        sum += ((2 * ma * mb + c1) * (2 * sab + c2)) / ((ma * ma + mb * mb + c1) * (saa + sbb + c2));
        count += 1;
      }
  return sum / count;
}

}  // namespace

TEST_CASE("psnr") {
  const Image a = random_image(16, 12, 1);
  CHECK(psnr(a, a) == kPsnrCap);
  CHECK(psnr(Image(8, 8, 3, 0.0f), Image(8, 8, 3, 1.0f)) == 0.0);
  const Image b = random_image(16, 12, 2);
  double mse = 0.0;
  for (Index i = 0; i < a.size(); ++i) mse += std::pow(double(a.array()[i]) - double(b.array()[i]), 2) / a.size();
  CHECK(std::abs(psnr(a, b) - 10.0 * std::log10(1.0 / mse)) < 1e-6);
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK_THROWS_AS(psnr(a, random_image(12, 12, 3)), ValidationError);
}

TEST_CASE("l1 and l2 distances on the 8-bit scale") {
  const Image a = random_image(9, 7, 4);
  CHECK(l1_distance(a, a) == 0.0);
  CHECK(l2_distance(a, a) == 0.0);
  CHECK(l1_distance(Image(4, 4, 3, 0.0f), Image(4, 4, 3, 1.0f)) == 255.0);
  CHECK(l2_distance(Image(4, 4, 3, 0.0f), Image(4, 4, 3, 1.0f)) == 255.0);

  // 4 x 4 single-channel pair differing by k/255 at pixel k (k = 0..15).
  Image x(4, 4, 1), y(4, 4, 1);
  for (Index k = 0; k < 16; ++k) {
    x.array()[k] = 0.0f;
    y.array()[k] = static_cast<float>(k) / 255.0f;
  }
  CHECK(std::abs(l1_distance(x, y) - 7.5) < 1e-6);                   // mean of 0..15
  CHECK(std::abs(l2_distance(x, y) - std::sqrt(1240.0 / 16.0)) < 1e-6);  // sum k^2 = 1240
  CHECK(l1_distance(x, y) == l1_distance(y, x));
  CHECK_THROWS_AS(l2_distance(x, Image(4, 4, 3)), ValidationError);
}

TEST_CASE("ssim") {
  const Image a = random_image(24, 20, 5);
  CHECK(ssim(a, a) == 1.0);
  const Image b = random_image(24, 20, 6);
  CHECK(std::abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-4);
  const Image c = add_noise(a, 0.1f, 7);
  CHECK(std::abs(ssim(a, c) - ssim_oracle(a, c)) < 1e-4);
  CHECK(std::abs(ssim(a, c) - ssim(c, a)) < 1e-9);

  // Constant images: only the luminance term differs from 1.
  const double va = 0.2, vb = 0.7, c1 = 1e-4;
  const double expected = (2 * va * vb + c1) / (va * va + vb * vb + c1);
  CHECK(ssim(Image(16, 16, 3, float(va)), Image(16, 16, 3, float(vb))) == doctest::Approx(expected).epsilon(1e-6));

  CHECK_THROWS_AS(ssim(Image(10, 30, 3), Image(10, 30, 3)), ValidationError);
}

TEST_CASE("more noise lowers ssim and psnr") {
  const Image img = synthetic_panorama(64, 32, 8);
  double last_ssim = 1.0, last_psnr = kPsnrCap;
  for (float amp : {0.02f, 0.05f, 0.1f, 0.2f, 0.4f}) {
    const Image noisy = add_noise(img, amp, 9);
    CHECK(ssim(img, noisy) < last_ssim);
    CHECK(psnr(img, noisy) < last_psnr);
    last_ssim = ssim(img, noisy);
    last_psnr = psnr(img, noisy);
  }
}

TEST_CASE("hole-only metrics") {
  const Image a = random_image(32, 16, 10);
  const Image b = random_image(32, 16, 11);
  Mask m(32, 16, 1, 1.0f);
  for (Index y = 2; y < 14; ++y)
    for (Index x = 5; x < 20; ++x) m(x, y) = 0.0f;
  double abs = 0.0, sq = 0.0, n = 0.0;
  for (Index y = 0; y < 16; ++y)
    for (Index x = 0; x < 32; ++x)
      if (m(x, y) == 0.0f)
        for (Index c = 0; c < 3; ++c) {
          const double d = double(a(x, y, c)) - double(b(x, y, c));
          abs += std::abs(d);
          sq += d * d;
          n += 1;
        }
  CHECK(std::abs(l1_hole(a, b, m) - 255.0 * abs / n) < 1e-6);
  CHECK(std::abs(l2_hole(a, b, m) - 255.0 * std::sqrt(sq / n)) < 1e-6);
  CHECK(std::abs(psnr_hole(a, b, m) - 10.0 * std::log10(n / sq)) < 1e-6);
  CHECK(ssim_hole(a, a, m) == 1.0);
  CHECK(std::isnan(l1_hole(a, b, Mask(32, 16, 1, 1.0f))));
}

TEST_CASE("evaluation with stub inpainters") {
  const PreprocessOptions opt{32, 32, 0.5f};
  const InMemorySource data(synthetic_dataset(3, opt, 21));

  const EvaluationReport identity = evaluate(IdentityInpainter{}, data);
  REQUIRE(identity.rows.size() == 3);
  for (const MetricsRow& r : identity.rows) {
    CHECK(r.ssim == 1.0);
    CHECK(r.l1 == 0.0);
    CHECK(r.psnr == kPsnrCap);
  }

  const EvaluationReport gray = evaluate(FillInpainter{0.5f}, data);
  double mean_l1 = 0.0, mean_ssim = 0.0;
  for (const MetricsRow& r : gray.rows) {
    CHECK(r.ssim < 1.0);
    CHECK(r.hole_l1 > r.l1);
    mean_l1 += r.l1 / 3.0;
    mean_ssim += r.ssim / 3.0;
  }
  CHECK(std::abs(gray.summary.l1 - mean_l1) < 1e-9);
  CHECK(std::abs(gray.summary.ssim - mean_ssim) < 1e-9);
  CHECK(gray.rows[1].image_id == "synthetic_001");

  const EvaluationReport again = evaluate(FillInpainter{0.5f}, data);
  CHECK(format_metrics_csv(again) == format_metrics_csv(gray));
  CHECK(format_metrics_json(again) == format_metrics_json(gray));

  EvaluateOptions cube;
  cube.domain = MetricDomain::kCubemap;
  cube.face_size = 32;
  const EvaluationReport faces = evaluate(IdentityInpainter{}, data, cube);
  CHECK(faces.rows[0].ssim == 1.0);
  CHECK(format_metrics_csv(faces).find(",cubemap,") != std::string::npos);
  CHECK(format_metrics_json(faces).find("\"domain\": \"cubemap\"") != std::string::npos);
}

TEST_CASE("report formats") {
  EvaluationReport r;
  r.rows.push_back({"a", 0.5, 20.0, 3.0, 4.0, 0.25, 10.0, 6.0, 8.0});
  r.rows.push_back({"b", 1.0, 40.0, 1.0, 2.0, 0.75, 30.0, 2.0, 4.0});
  r.summary = summarize(r.rows);
  CHECK(r.summary.psnr == 30.0);
  const std::string csv = format_metrics_csv(r);
  CHECK(csv ==
        "image_id,domain,ssim,psnr,l1,l2,hole_ssim,hole_psnr,hole_l1,hole_l2\n"
        "a,equirect,0.500000,20.000000,3.000000,4.000000,0.250000,10.000000,6.000000,8.000000\n"
        "b,equirect,1.000000,40.000000,1.000000,2.000000,0.750000,30.000000,2.000000,4.000000\n"
        "mean,equirect,0.750000,30.000000,2.000000,3.000000,0.500000,20.000000,4.000000,6.000000\n");
  const std::string json = format_metrics_json(r);
  CHECK(json.find("{\"metric\": \"PSNR\", \"better\": \"higher\", \"whole\": 30.000000, \"hole\": 20.000000}") !=
        std::string::npos);
  CHECK(json.find("\"L2 distance\"") != std::string::npos);
}

TEST_CASE("comparison grid") {
  std::vector<std::array<Image, 3>> rows;
  rows.push_back({Image(4, 2, 3, 0.1f), Image(4, 2, 3, 0.2f), Image(4, 2, 3, 0.3f)});
  rows.push_back({Image(4, 2, 3, 0.4f), Image(4, 2, 3, 0.5f), Image(4, 2, 3, 0.6f)});
  const Image g = comparison_grid(rows, 1);
  CHECK(g.width() == 14);
  CHECK(g.height() == 5);
  CHECK(g(0, 0, 0) == 0.1f);
  CHECK(g(4, 0, 0) == 1.0f);  // gap
  CHECK(g(5, 0, 0) == 0.2f);
  CHECK(g(10, 4, 2) == 0.6f);
  rows[1][2] = Image(3, 2, 3);
  CHECK_THROWS_AS(comparison_grid(rows), ValidationError);
}

TEST_CASE("generator inpainting keeps valid pixels") {
  Generator<float> g(GeneratorConfig::for_face_size(16));
  Rng rng(3);
  g.reset_parameters(rng);
  const Image pano = synthetic_panorama(64, 32, 2);
  const Image all_valid = inpaint_equirect(g, pano, Mask(64, 32, 1, 1.0f), 16);
  CHECK(all_valid == pano);
  const Mask m = rect_mask(64, 32, RectSpec{10, 5, 20, 10});
  const Image out = inpaint_equirect(g, apply_mask(pano, m), m, 16);
  for (Index y = 0; y < 32; ++y)
    for (Index x = 0; x < 64; ++x)
      if (m(x, y) == 1.0f) CHECK(out(x, y, 1) == pano(x, y, 1));
  CHECK_THROWS_AS(inpaint_equirect(g, pano, Mask(32, 32, 1, 1.0f), 16), ValidationError);
}
