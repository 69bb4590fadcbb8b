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

#include "pano/evaluation.hpp"

#include <cmath>
#include <cstdio>

#include "pano/masking.hpp"
#include "pano/projection.hpp"

namespace pano {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_pair(const Image& a, const Image& b, const char* what) {
  require_same_shape(a, b, what);
  if (a.empty()) throw ValidationError(std::string(what) + ": empty image");
}

void check_mask(const Image& a, const Mask& mask, const char* what) {
  if (mask.width() != a.width() || mask.height() != a.height())
    throw ValidationError(std::string(what) + ": mask size differs from the image");
  require_binary(mask, what);
}

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

// Squared and absolute error sums over the pixels selected by `use`.
struct ErrorSums {
  double abs = 0.0;
  double sq = 0.0;
  double count = 0.0;
};

template <typename Select>
ErrorSums error_sums(const Image& a, const Image& b, Select use) {
  ErrorSums s;
  const Index c = a.channels();
  for (Index y = 0; y < a.height(); ++y)
    for (Index x = 0; x < a.width(); ++x) {
      if (!use(x, y)) continue;
      for (Index k = 0; k < c; ++k) {
        const double d = static_cast<double>(a(x, y, k)) - static_cast<double>(b(x, y, k));
        s.abs += std::abs(d);
        s.sq += d * d;
      }
      s.count += static_cast<double>(c);
    }
  return s;
}

ErrorSums all_sums(const Image& a, const Image& b) {
  return error_sums(a, b, [](Index, Index) { return true; });
}

ErrorSums hole_sums(const Image& a, const Image& b, const Mask& m) {
  return error_sums(a, b, [&m](Index x, Index y) { return m(x, y) == 0.0f; });
}

std::vector<double> gaussian_window(const SsimOptions& o) {
  std::vector<double> w(o.window);
  const double mid = (o.window - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < o.window; ++i) {
    w[i] = std::exp(-(i - mid) * (i - mid) / (2.0 * o.sigma * o.sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

using Plane = Eigen::ArrayXXd;  // rows = y, cols = x

// Valid-mode separable filtering.
Plane filter_valid(const Plane& p, const std::vector<double>& w) {
  const Index k = static_cast<Index>(w.size());
  const Index out_h = p.rows() - k + 1;
  const Index out_w = p.cols() - k + 1;
  Plane horizontal = Plane::Zero(p.rows(), out_w);
  for (Index i = 0; i < k; ++i) horizontal += w[i] * p.middleCols(i, out_w);
  Plane out = Plane::Zero(out_h, out_w);
  for (Index i = 0; i < k; ++i) out += w[i] * horizontal.middleRows(i, out_h);
  return out;
}

Plane channel_plane(const Image& img, Index channel) {
  Plane p(img.height(), img.width());
  for (Index y = 0; y < img.height(); ++y)
    for (Index x = 0; x < img.width(); ++x) p(y, x) = img(x, y, channel);
  return p;
}

// One SSIM map per channel, each (H - window + 1) x (W - window + 1).
std::vector<Plane> ssim_maps(const Image& a, const Image& b, const SsimOptions& o) {
  check_pair(a, b, "ssim");
  if (o.window < 1 || o.sigma <= 0.0) throw ConfigError("ssim: invalid window");
  if (a.width() < o.window || a.height() < o.window)
    throw ValidationError("ssim: image " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                          " is smaller than the " + std::to_string(o.window) + "x" + std::to_string(o.window) +
                          " window");
  const auto w = gaussian_window(o);
  const double c1 = o.k1 * o.k1;
  const double c2 = o.k2 * o.k2;
  std::vector<Plane> maps;
  for (Index c = 0; c < a.channels(); ++c) {
    const Plane pa = channel_plane(a, c);
    const Plane pb = channel_plane(b, c);
    const Plane mu_a = filter_valid(pa, w);
    const Plane mu_b = filter_valid(pb, w);
    const Plane var_a = filter_valid(pa * pa, w) - mu_a * mu_a;
    const Plane var_b = filter_valid(pb * pb, w) - mu_b * mu_b;
    const Plane cov = filter_valid(pa * pb, w) - mu_a * mu_b;
    maps.push_back(((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                   ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)));
  }
  return maps;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string json_number(double v) { return std::isnan(v) ? "null" : fmt(v); }

std::string json_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out;
}

MetricsRow score(const std::string& id, const Image& result, const Image& truth, const Mask& mask) {
  MetricsRow r;
  r.image_id = id;
  r.ssim = ssim(result, truth);
  r.psnr = psnr(result, truth);
  r.l1 = l1_distance(result, truth);
  r.l2 = l2_distance(result, truth);
  r.hole_ssim = ssim_hole(result, truth, mask);
  r.hole_psnr = psnr_hole(result, truth, mask);
  r.hole_l1 = l1_hole(result, truth, mask);
  r.hole_l2 = l2_hole(result, truth, mask);
  return r;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_pair(a, b, "psnr");
  const ErrorSums s = all_sums(a, b);
  return psnr_from_mse(s.sq / s.count);
}

double ssim(const Image& a, const Image& b, const SsimOptions& options) {
  const auto maps = ssim_maps(a, b, options);
  double total = 0.0;
  double count = 0.0;
  for (const Plane& m : maps) {
    total += m.sum();
    count += static_cast<double>(m.size());
  }
  return total / count;
}

double l1_distance(const Image& a, const Image& b) {
  check_pair(a, b, "l1_distance");
  const ErrorSums s = all_sums(a, b);
  return 255.0 * s.abs / s.count;
}

double l2_distance(const Image& a, const Image& b) {
  check_pair(a, b, "l2_distance");
  const ErrorSums s = all_sums(a, b);
  return 255.0 * std::sqrt(s.sq / s.count);
}

double psnr_hole(const Image& a, const Image& b, const Mask& mask) {
  check_pair(a, b, "psnr_hole");
  check_mask(a, mask, "psnr_hole");
  const ErrorSums s = hole_sums(a, b, mask);
  return s.count > 0 ? psnr_from_mse(s.sq / s.count) : kNaN;
}

double ssim_hole(const Image& a, const Image& b, const Mask& mask, const SsimOptions& options) {
  check_mask(a, mask, "ssim_hole");
  const auto maps = ssim_maps(a, b, options);
  const Index half = options.window / 2;
  double total = 0.0;
  double count = 0.0;
  for (const Plane& m : maps)
    for (Index y = 0; y < m.rows(); ++y)
      for (Index x = 0; x < m.cols(); ++x)
        if (mask(x + half, y + half) == 0.0f) {
          total += m(y, x);
          count += 1.0;
        }
  return count > 0 ? total / count : kNaN;
}

double l1_hole(const Image& a, const Image& b, const Mask& mask) {
  check_pair(a, b, "l1_hole");
  check_mask(a, mask, "l1_hole");
  const ErrorSums s = hole_sums(a, b, mask);
  return s.count > 0 ? 255.0 * s.abs / s.count : kNaN;
}

double l2_hole(const Image& a, const Image& b, const Mask& mask) {
  check_pair(a, b, "l2_hole");
  check_mask(a, mask, "l2_hole");
  const ErrorSums s = hole_sums(a, b, mask);
  return s.count > 0 ? 255.0 * std::sqrt(s.sq / s.count) : kNaN;
}

const char* domain_name(MetricDomain domain) { return domain == MetricDomain::kEquirect ? "equirect" : "cubemap"; }

MetricsRow summarize(const std::vector<MetricsRow>& rows) {
  MetricsRow m;
  m.image_id = "mean";
  if (rows.empty()) return m;
  for (const MetricsRow& r : rows) {
    m.ssim += r.ssim;
    m.psnr += r.psnr;
    m.l1 += r.l1;
    m.l2 += r.l2;
    m.hole_ssim += r.hole_ssim;
    m.hole_psnr += r.hole_psnr;
    m.hole_l1 += r.hole_l1;
    m.hole_l2 += r.hole_l2;
  }
  const double n = static_cast<double>(rows.size());
  for (double* v : {&m.ssim, &m.psnr, &m.l1, &m.l2, &m.hole_ssim, &m.hole_psnr, &m.hole_l1, &m.hole_l2}) *v /= n;
  return m;
}

Image inpaint_equirect(Generator<float>& generator, const Image& damaged, const Mask& mask, Index face_size,
                       float fill) {
  validate_equirect(damaged);
  if (mask.width() != damaged.width() || mask.height() != damaged.height())
    throw ValidationError("inpaint: mask size differs from the panorama");
  require_binary(mask, "inpaint");
  const CubeMask face_masks = mask_to_cubemap(mask, face_size);
  const CubeMap faces = apply_mask(equirect_to_cubemap(damaged, face_size), face_masks, fill);

  const CubeMap* cube_ptr = &faces;
  const Tensor<float> input = cubes_to_tensor<float>(std::span<const CubeMap* const>(&cube_ptr, 1));
  const CubeMap* mask_ptr = &face_masks;
  const Tensor<float> masks = cubes_to_tensor<float>(std::span<const CubeMap* const>(&mask_ptr, 1));

  NoGradGuard no_grad;
  const Variable<float> generated = generator_forward(generator, input, masks, ForwardContext{Mode::kEval, false, nullptr});
  const Image predicted = cubemap_to_equirect(tensor_to_cube(generated.value(), 0), damaged.width(), damaged.height());

  Image out(damaged.width(), damaged.height(), damaged.channels());
  for (Index y = 0; y < out.height(); ++y)
    for (Index x = 0; x < out.width(); ++x)
      for (Index c = 0; c < out.channels(); ++c)
        out(x, y, c) = mask(x, y) == 1.0f ? damaged(x, y, c) : predicted(x, y, c);
  return out;
}

Image GeneratorInpainter::inpaint(const TrainingSample& sample) const {
  return inpaint_equirect(*generator_, apply_mask(sample.equirect, sample.equirect_mask, fill_), sample.equirect_mask,
                          face_size_, fill_);
}

Image FillInpainter::inpaint(const TrainingSample& sample) const {
  return apply_mask(sample.equirect, sample.equirect_mask, fill_);
}

EvaluationReport evaluate(const Inpainter& inpainter, const SampleSource& dataset, const EvaluateOptions& options) {
  if (dataset.size() == 0) throw ConfigError("evaluation dataset is empty");
  EvaluationReport report;
  report.domain = options.domain;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const TrainingSample sample = dataset.load(i);
    validate_equirect(sample.equirect);
    const Image result = inpainter.inpaint(sample);
    require_same_shape(result, sample.equirect, "evaluate");
    if (options.domain == MetricDomain::kEquirect) {
      report.rows.push_back(score(sample.image_id, result, sample.equirect, sample.equirect_mask));
    } else {
      const Index s = options.face_size;
      const Image truth = cubemap_to_strip(equirect_to_cubemap(sample.equirect, s));
      const Image got = cubemap_to_strip(equirect_to_cubemap(result, s));
      const CubeMask m = mask_to_cubemap(sample.equirect_mask, s);
      report.rows.push_back(score(sample.image_id, got, truth, cubemap_to_strip(m)));
    }
  }
  report.summary = summarize(report.rows);
  return report;
}

std::string format_metrics_csv(const EvaluationReport& report) {
  std::string out = "image_id,domain,ssim,psnr,l1,l2,hole_ssim,hole_psnr,hole_l1,hole_l2\n";
  const std::string domain = domain_name(report.domain);
  auto line = [&](const MetricsRow& r) {
    out += r.image_id + "," + domain + "," + fmt(r.ssim) + "," + fmt(r.psnr) + "," + fmt(r.l1) + "," + fmt(r.l2) +
           "," + fmt(r.hole_ssim) + "," + fmt(r.hole_psnr) + "," + fmt(r.hole_l1) + "," + fmt(r.hole_l2) + "\n";
  };
  for (const MetricsRow& r : report.rows) line(r);
  line(report.summary);
  return out;
}

std::string format_metrics_json(const EvaluationReport& report) {
  auto object = [](const MetricsRow& r, const std::string& indent) {
    return indent + "{\"image_id\": \"" + json_escape(r.image_id) + "\", \"ssim\": " + json_number(r.ssim) +
           ", \"psnr\": " + json_number(r.psnr) + ", \"l1\": " + json_number(r.l1) + ", \"l2\": " +
           json_number(r.l2) + ", \"hole_ssim\": " + json_number(r.hole_ssim) + ", \"hole_psnr\": " +
           json_number(r.hole_psnr) + ", \"hole_l1\": " + json_number(r.hole_l1) + ", \"hole_l2\": " +
           json_number(r.hole_l2) + "}";
  };
  const MetricsRow& s = report.summary;
  std::string out = "{\n  \"domain\": \"" + std::string(domain_name(report.domain)) + "\",\n";
  out += "  \"psnr_cap_db\": " + fmt(kPsnrCap) + ",\n  \"images\": " + std::to_string(report.rows.size()) + ",\n";
  out += "  \"rows\": [\n";
  for (std::size_t i = 0; i < report.rows.size(); ++i)
    out += object(report.rows[i], "    ") + (i + 1 < report.rows.size() ? ",\n" : "\n");
  out += "  ],\n  \"summary\": [\n";
  out += "    {\"metric\": \"SSIM\", \"better\": \"higher\", \"whole\": " + json_number(s.ssim) +
         ", \"hole\": " + json_number(s.hole_ssim) + "},\n";
  out += "    {\"metric\": \"PSNR\", \"better\": \"higher\", \"whole\": " + json_number(s.psnr) +
         ", \"hole\": " + json_number(s.hole_psnr) + "},\n";
  out += "    {\"metric\": \"L1 distance\", \"better\": \"lower\", \"whole\": " + json_number(s.l1) +
         ", \"hole\": " + json_number(s.hole_l1) + "},\n";
  out += "    {\"metric\": \"L2 distance\", \"better\": \"lower\", \"whole\": " + json_number(s.l2) +
         ", \"hole\": " + json_number(s.hole_l2) + "}\n";
  out += "  ]\n}\n";
  return out;
}

Image comparison_grid(const std::vector<std::array<Image, 3>>& rows, Index gap) {
  if (rows.empty()) throw ValidationError("comparison grid needs at least one row");
  const Index w = rows.front()[0].width();
  const Index h = rows.front()[0].height();
  for (const auto& row : rows)
    for (const Image& img : row)
      if (img.width() != w || img.height() != h || img.channels() != 3)
        throw ValidationError("comparison grid images must share one RGB size");
  const Index cols = 3;
  Image grid(cols * w + (cols - 1) * gap, static_cast<Index>(rows.size()) * h + (static_cast<Index>(rows.size()) - 1) * gap,
             3, 1.0f);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (Index c = 0; c < cols; ++c) {
      const Image& img = rows[r][c];
      const Index ox = c * (w + gap);
      const Index oy = static_cast<Index>(r) * (h + gap);
      for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
          for (Index k = 0; k < 3; ++k) grid(ox + x, oy + y, k) = img(x, y, k);
    }
  return grid;
}

}  // namespace pano
