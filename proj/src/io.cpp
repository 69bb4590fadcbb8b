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

#include "pano/io.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "pano/file_util.hpp"

namespace pano {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool is_image_file(const std::filesystem::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

cv::Mat decode(const std::filesystem::path& path, int flags) {
  std::string bytes = read_file(path);
  const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1, bytes.data());
  cv::Mat img;
  try {
    img = cv::imdecode(raw, flags);
  } catch (const cv::Exception& e) {
    throw ValidationError("cannot decode " + path.string() + ": " + e.what());
  }
  if (img.empty()) throw ValidationError("cannot decode " + path.string());
  return img;
}

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::floor(c * 255.0f + 0.5f));
}

void encode_and_write(const std::filesystem::path& path, const cv::Mat& mat) {
  std::string ext = lower(path.extension().string());
  if (ext != ".png" && ext != ".jpg" && ext != ".jpeg")
    throw ConfigError("unsupported image extension '" + ext + "' for " + path.string());
  std::vector<uchar> buf;
  std::vector<int> params;
  if (ext == ".png") params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  else params = {cv::IMWRITE_JPEG_QUALITY, 95};
  if (!cv::imencode(ext, mat, buf, params)) throw IoError("cannot encode " + path.string());
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(buf.data()), buf.size()));
}

std::string face_path(const std::filesystem::path& pattern, Face f) {
  std::string s = pattern.string();
  const auto pos = s.find("%s");
  if (pos == std::string::npos) throw ConfigError("cube-map file pattern must contain %s: " + s);
  s.replace(pos, 2, std::string(1, face_letter(f)));
  return s;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  cv::Mat m = decode(path, cv::IMREAD_COLOR);  // BGR, 8 bit
  if (m.depth() != CV_8U) throw ValidationError("only 8-bit images are supported: " + path.string());
  Image img(m.cols, m.rows, 3);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < m.cols; ++x)
      for (int c = 0; c < 3; ++c) img(x, y, c) = row[x][2 - c] / 255.0f;
  }
  return img;
}

void write_image(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 3 && img.channels() != 1) throw ValidationError("write_image expects 1 or 3 channels");
  cv::Mat m(static_cast<int>(img.height()), static_cast<int>(img.width()), img.channels() == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < m.rows; ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      if (img.channels() == 3)
        for (int c = 0; c < 3; ++c) row[3 * x + c] = to_byte(img(x, y, 2 - c));
      else
        row[x] = to_byte(img(x, y));
    }
  }
  encode_and_write(path, m);
}

Mask read_mask(const std::filesystem::path& path) {
  cv::Mat m = decode(path, cv::IMREAD_UNCHANGED);
  if (m.depth() != CV_8U || m.channels() != 1)
    throw ValidationError("mask must be a single-channel 8-bit image: " + path.string());
  Mask mask(m.cols, m.rows, 1);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      if (row[x] != 0 && row[x] != 255)
        throw ValidationError("mask " + path.string() + " has a value other than 0 or 255 at (" + std::to_string(x) +
                              ", " + std::to_string(y) + ")");
      mask(x, y) = row[x] == 255 ? 1.0f : 0.0f;
    }
  }
  return mask;
}

void write_mask(const std::filesystem::path& path, const Mask& mask) {
  require_binary(mask, "write_mask");
  if (lower(path.extension().string()) != ".png") throw ConfigError("masks are stored as PNG: " + path.string());
  write_image(path, mask);
}

Image quantize_8bit(const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (Index i = 0; i < img.size(); ++i) out.array()[i] = to_byte(img.array()[i]) / 255.0f;
  return out;
}

void write_cubemap(const std::filesystem::path& pattern, const CubeMap& cube) {
  cube.validate();
  if (pattern.string().find("%s") == std::string::npos) {
    write_image(pattern, cubemap_to_strip(cube));
    return;
  }
  for (Face f : kFaceOrder) write_image(face_path(pattern, f), cube[f]);
}

CubeMap read_cubemap(const std::filesystem::path& pattern) {
  if (pattern.string().find("%s") == std::string::npos) return strip_to_cubemap(read_image(pattern));
  CubeMap cube;
  for (Face f : kFaceOrder) cube[f] = read_image(face_path(pattern, f));
  cube.validate();
  return cube;
}

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "eval"; }

const char* category_name(Category c) {
  switch (c) {
    case Category::kBuildings: return "buildings";
    case Category::kScenery: return "scenery";
    default: return "all";
  }
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "eval") return Split::kEval;
  throw ConfigError("split must be 'train' or 'eval', got '" + s + "'");
}

Category parse_category(const std::string& s) {
  if (s == "all") return Category::kAll;
  if (s == "buildings") return Category::kBuildings;
  if (s == "scenery") return Category::kScenery;
  throw ConfigError("category must be 'all', 'buildings' or 'scenery', got '" + s + "'");
}

DatasetManifest ingest(const std::filesystem::path& dir, const IngestRules& rules) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw ConfigError("dataset directory does not exist: " + dir.string());
  DatasetManifest manifest;
  manifest.root = dir;
  manifest.split = rules.split;
  manifest.category = rules.category;

  std::vector<std::string> candidates;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file() || !is_image_file(entry.path())) continue;
    const fs::path rel = fs::relative(entry.path(), dir);
    if (rules.category != Category::kAll) {
      const auto first = rel.begin();
      if (std::distance(rel.begin(), rel.end()) < 2 || first->string() != category_name(rules.category)) continue;
    }
    candidates.push_back(rel.generic_string());
  }
  std::sort(candidates.begin(), candidates.end());
  for (const std::string& id : candidates) {
    try {
      decode(dir / id, cv::IMREAD_COLOR);
      manifest.image_ids.push_back(id);
    } catch (const Error& e) {
      manifest.skipped.push_back({id, e.what()});
    }
  }
  if (manifest.image_ids.empty()) throw ConfigError("no images found in " + dir.string());
  return manifest;
}

std::string format_skip_report(const DatasetManifest& manifest) {
  std::string out = "path,reason\n";
  for (const auto& s : manifest.skipped) {
    std::string reason = s.reason;
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    std::replace(reason.begin(), reason.end(), ',', ';');
    out += s.path + "," + reason + "\n";
  }
  return out;
}

TrainingSample preprocess(const std::filesystem::path& file, const PreprocessOptions& options, std::uint64_t seed,
                          const std::string& image_id) {
  return preprocess_image(image_id.empty() ? file.filename().string() : image_id, read_image(file), options, seed);
}

FileSource::FileSource(DatasetManifest manifest, PreprocessOptions options, std::uint64_t seed, bool cache)
    : manifest_(std::move(manifest)), options_(options), seed_(seed) {
  if (manifest_.image_ids.empty()) throw ConfigError("dataset is empty");
  if (cache) {
    for (std::size_t i = 0; i < manifest_.image_ids.size(); ++i) cache_.push_back(load(i));
  }
}

TrainingSample FileSource::load(std::size_t index) const {
  if (index < cache_.size()) return cache_[index];
  const std::string& id = manifest_.image_ids.at(index);
  return preprocess(manifest_.root / id, options_, sample_seed(seed_, index), id);
}

}  // namespace pano
