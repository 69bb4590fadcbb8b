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

// File formats and dataset ingestion. Images are 8-bit RGB PNG or JPEG;
// masks are single-channel PNG with 0 (hole) and 255 (valid).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pano/dataset.hpp"

namespace pano {

/// Decodes to RGB in [0, 1]. Gray and RGBA inputs are converted.
Image read_image(const std::filesystem::path& path);
/// Quantises to 8 bits and writes atomically; format follows the extension.
void write_image(const std::filesystem::path& path, const Image& img);

/// Reads a {0, 255} single-channel mask as {0, 1}.
Mask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const Mask& mask);

/// Round-half-up quantisation to 0..255 and back.
Image quantize_8bit(const Image& img);

/// Cube-map files: "strip" writes one 6S x S image, otherwise `pattern` must
/// contain "%s", replaced by the face letter.
void write_cubemap(const std::filesystem::path& pattern, const CubeMap& cube);
CubeMap read_cubemap(const std::filesystem::path& pattern);

enum class Split { kTrain, kEval };
enum class Category { kAll, kBuildings, kScenery };

const char* split_name(Split s);
const char* category_name(Category c);
Split parse_split(const std::string& s);
Category parse_category(const std::string& s);

struct IngestRules {
  Split split = Split::kTrain;
  Category category = Category::kAll;  // taken from the first directory level below the root
};

struct SkippedFile {
  std::string path;
  std::string reason;
};

struct DatasetManifest {
  std::filesystem::path root;
  Split split = Split::kTrain;
  Category category = Category::kAll;
  std::vector<std::string> image_ids;  // root-relative paths, sorted
  std::vector<SkippedFile> skipped;
};

/// Recursively collects decodable PNG/JPEG files. Throws ConfigError when
/// nothing usable is found.
DatasetManifest ingest(const std::filesystem::path& dir, const IngestRules& rules = {});

std::string format_skip_report(const DatasetManifest& manifest);

TrainingSample preprocess(const std::filesystem::path& file, const PreprocessOptions& options, std::uint64_t seed,
                          const std::string& image_id = "");

/// Samples of a manifest; image i uses mask seed sample_seed(seed, i).
class FileSource : public SampleSource {
 public:
  FileSource(DatasetManifest manifest, PreprocessOptions options, std::uint64_t seed, bool cache = true);
  std::size_t size() const override { return manifest_.image_ids.size(); }
  TrainingSample load(std::size_t index) const override;
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  DatasetManifest manifest_;
  PreprocessOptions options_;
  std::uint64_t seed_;
  std::vector<TrainingSample> cache_;
};

}  // namespace pano
