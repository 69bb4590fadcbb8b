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

#include "pano/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pano {

namespace {

constexpr double kPi = std::numbers::pi;

Index wrap(Index i, Index n) {
  const Index r = i % n;
  return r < 0 ? r + n : r;
}

Index clamp_index(Index i, Index n) { return std::clamp<Index>(i, 0, n - 1); }

double below_one(double t) { return std::clamp(t, 0.0, std::nextafter(1.0, 0.0)); }

// Bilinear or nearest lookup inside one face, clamped at the face border.
template <typename S>
S sample_face(const ImageT<S>& face, double x, double y, Index channel, Filter filter) {
  const Index n = face.width();
  if (filter == Filter::kNearest) {
    const auto xi = clamp_index(static_cast<Index>(std::floor(x + 0.5)), n);
    const auto yi = clamp_index(static_cast<Index>(std::floor(y + 0.5)), n);
    return face(xi, yi, channel);
  }
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double tx = x - fx;
  const double ty = y - fy;
  const Index x0 = clamp_index(static_cast<Index>(fx), n);
  const Index x1 = clamp_index(static_cast<Index>(fx) + 1, n);
  const Index y0 = clamp_index(static_cast<Index>(fy), n);
  const Index y1 = clamp_index(static_cast<Index>(fy) + 1, n);
  const double top = (1 - tx) * face(x0, y0, channel) + tx * face(x1, y0, channel);
  const double bottom = (1 - tx) * face(x0, y1, channel) + tx * face(x1, y1, channel);
  return static_cast<S>((1 - ty) * top + ty * bottom);
}

}  // namespace

char face_letter(Face f) {
  static constexpr char kLetters[] = {'F', 'R', 'B', 'L', 'T', 'D'};
  return kLetters[static_cast<int>(f)];
}

template <typename S>
void CubeMapT<S>::validate() const {
  const Index n = faces[0].width();
  if (n < 1) throw ValidationError("cube map faces are empty");
  for (const auto& f : faces) {
    if (f.width() != n || f.height() != n || f.channels() != faces[0].channels())
      throw ValidationError("cube map faces must be square and share one size");
  }
}

template struct CubeMapT<float>;
template struct CubeMapT<double>;

void validate_equirect(const Image& img) {
  if (img.width() != 2 * img.height() || img.height() < 1)
    throw ValidationError("equirectangular image must be 2:1, got " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()));
  if (img.channels() != 3) throw ValidationError("equirectangular image must have 3 channels");
  if (img.size() > 0 && (img.array().minCoeff() < 0.0f || img.array().maxCoeff() > 1.0f))
    throw ValidationError("equirectangular image values must lie in [0, 1]");
}

Direction pixel_to_direction(Index width, Index height, Index x, Index y) {
  if (x < 0 || x >= width || y < 0 || y >= height)
    throw PreconditionError("pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                            std::to_string(width) + "x" + std::to_string(height));
  return equirect_to_direction(width, height, static_cast<double>(x), static_cast<double>(y));
}

Direction equirect_to_direction(Index width, Index height, double x, double y) {
  const double theta = 2 * kPi * ((x + 0.5) / static_cast<double>(width)) - kPi;
  const double phi = kPi * ((y + 0.5) / static_cast<double>(height)) - kPi / 2;
  return {std::cos(phi) * std::sin(theta), std::sin(phi), std::cos(phi) * std::cos(theta)};
}

Eigen::Vector2d direction_to_equirect(const Direction& d, Index width, Index height) {
  const double theta = std::atan2(d.x(), d.z());
  const double phi = std::asin(std::clamp(d.y(), -1.0, 1.0));
  return {(theta + kPi) / (2 * kPi) * static_cast<double>(width) - 0.5,
          (phi + kPi / 2) / kPi * static_cast<double>(height) - 0.5};
}

FaceCoord direction_to_face_uv(const Direction& d) {
  const double norm = d.norm();
  if (!(std::abs(norm - 1.0) < 1e-6)) throw PreconditionError("direction must be unit length");
  const double ax = std::abs(d.x());
  const double ay = std::abs(d.y());
  const double az = std::abs(d.z());
  const double top = std::max({ax, ay, az});
  Face face;
  double a;
  double b;
  if (d.z() > 0 && az == top) {
    face = Face::F, a = d.x() / d.z(), b = d.y() / d.z();
  } else if (d.x() > 0 && ax == top) {
    face = Face::R, a = -d.z() / d.x(), b = d.y() / d.x();
  } else if (d.z() < 0 && az == top) {
    face = Face::B, a = d.x() / d.z(), b = -d.y() / d.z();
  } else if (d.x() < 0 && ax == top) {
    face = Face::L, a = -d.z() / d.x(), b = -d.y() / d.x();
  } else if (d.y() < 0) {
    face = Face::T, a = -d.x() / d.y(), b = -d.z() / d.y();
  } else {
    face = Face::D, a = d.x() / d.y(), b = -d.z() / d.y();
  }
  return {face, below_one((a + 1) / 2), below_one((b + 1) / 2)};
}

Direction face_uv_to_direction(Face face, double u, double v) {
  const double a = 2 * u - 1;
  const double b = 2 * v - 1;
  Direction d;
  switch (face) {
    case Face::F: d = {a, b, 1}; break;
    case Face::R: d = {1, b, -a}; break;
    case Face::B: d = {-a, b, -1}; break;
    case Face::L: d = {-1, b, a}; break;
    case Face::T: d = {a, -1, b}; break;
    case Face::D: d = {a, 1, -b}; break;
  }
  return d.normalized();
}

template <typename S>
S sample_equirect(const ImageT<S>& img, double x, double y, Index channel, Filter filter) {
  const Index w = img.width();
  const Index h = img.height();
  if (filter == Filter::kNearest) {
    const Index xi = wrap(static_cast<Index>(std::floor(x + 0.5)), w);
    const Index yi = clamp_index(static_cast<Index>(std::floor(y + 0.5)), h);
    return img(xi, yi, channel);
  }
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double tx = x - fx;
  const double ty = y - fy;
  const Index x0 = wrap(static_cast<Index>(fx), w);
  const Index x1 = wrap(static_cast<Index>(fx) + 1, w);
  const Index y0 = clamp_index(static_cast<Index>(fy), h);
  const Index y1 = clamp_index(static_cast<Index>(fy) + 1, h);
  const double top = (1 - tx) * img(x0, y0, channel) + tx * img(x1, y0, channel);
  const double bottom = (1 - tx) * img(x0, y1, channel) + tx * img(x1, y1, channel);
  return static_cast<S>((1 - ty) * top + ty * bottom);
}

template float sample_equirect(const ImageT<float>&, double, double, Index, Filter);
template double sample_equirect(const ImageT<double>&, double, double, Index, Filter);

namespace {

CubeMap resample_to_faces(const Image& img, Index face_size, Filter filter) {
  CubeMap cube;
  const double inv = 1.0 / static_cast<double>(face_size);
  for (Face f : kFaceOrder) {
    Image face(face_size, face_size, img.channels());
    for (Index j = 0; j < face_size; ++j) {
      for (Index i = 0; i < face_size; ++i) {
        const Direction d = face_uv_to_direction(f, (static_cast<double>(i) + 0.5) * inv, (static_cast<double>(j) + 0.5) * inv);
        const Eigen::Vector2d p = direction_to_equirect(d, img.width(), img.height());
        for (Index c = 0; c < img.channels(); ++c) face(i, j, c) = sample_equirect(img, p.x(), p.y(), c, filter);
      }
    }
    cube[f] = std::move(face);
  }
  return cube;
}

Image resample_to_equirect(const CubeMap& cube, Index width, Index height, Filter filter) {
  cube.validate();
  const Index n = cube.face_size();
  Image out(width, height, cube.faces[0].channels());
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      const FaceCoord fc = direction_to_face_uv(pixel_to_direction(width, height, x, y));
      const double fx = fc.u * static_cast<double>(n) - 0.5;
      const double fy = fc.v * static_cast<double>(n) - 0.5;
      for (Index c = 0; c < out.channels(); ++c) out(x, y, c) = sample_face(cube[fc.face], fx, fy, c, filter);
    }
  }
  return out;
}

}  // namespace

CubeMap equirect_to_cubemap(const Image& img, Index face_size, Filter filter) {
  if (face_size < 4) throw ConfigError("cube-map face size must be at least 4");
  validate_equirect(img);
  return resample_to_faces(img, face_size, filter);
}

Image cubemap_to_equirect(const CubeMap& cube, Index width, Index height, Filter filter) {
  if (width != 2 * height || height < 1) throw ConfigError("equirectangular output must be 2:1");
  return resample_to_equirect(cube, width, height, filter);
}

CubeMask mask_to_cubemap(const Mask& mask, Index face_size) {
  if (face_size < 4) throw ConfigError("cube-map face size must be at least 4");
  require_binary(mask, "mask_to_cubemap");
  if (mask.width() != 2 * mask.height()) throw ValidationError("equirectangular mask must be 2:1");
  return resample_to_faces(mask, face_size, Filter::kNearest);
}

Mask cubemask_to_equirect(const CubeMask& cube, Index width, Index height) {
  if (width != 2 * height || height < 1) throw ConfigError("equirectangular output must be 2:1");
  for (const auto& f : cube.faces) require_binary(f, "cubemask_to_equirect");
  return resample_to_equirect(cube, width, height, Filter::kNearest);
}

Image cubemap_to_strip(const CubeMap& cube) {
  cube.validate();
  const Index n = cube.face_size();
  const Index channels = cube.faces[0].channels();
  Image strip(6 * n, n, channels);
  for (std::size_t f = 0; f < 6; ++f)
    for (Index y = 0; y < n; ++y)
      for (Index x = 0; x < n; ++x)
        for (Index c = 0; c < channels; ++c) strip(static_cast<Index>(f) * n + x, y, c) = cube.faces[f](x, y, c);
  return strip;
}

CubeMap strip_to_cubemap(const Image& strip) {
  const Index n = strip.height();
  if (n < 1 || strip.width() != 6 * n) throw ValidationError("cube-map strip must be 6S x S");
  CubeMap cube;
  for (std::size_t f = 0; f < 6; ++f) {
    Image face(n, n, strip.channels());
    for (Index y = 0; y < n; ++y)
      for (Index x = 0; x < n; ++x)
        for (Index c = 0; c < strip.channels(); ++c) face(x, y, c) = strip(static_cast<Index>(f) * n + x, y, c);
    cube.faces[f] = std::move(face);
  }
  return cube;
}

}  // namespace pano
