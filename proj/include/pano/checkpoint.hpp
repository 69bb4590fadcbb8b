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

// Checkpoint container.
//
// Layout (all integers little-endian):
//   8 bytes   magic "PANO360C"
//   u32       format version (kCheckpointVersion)
//   u64       header length L
//   L bytes   UTF-8 JSON header: configs, projection convention, step,
//             random-engine states, data order and a tensor table of
//             {name, shape, offset, count}
//   ...       float32 payload; offsets count floats from the payload start
//
// Loading rejects other versions and other projection conventions.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "pano/training.hpp"

namespace pano {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "PANO360C";
inline constexpr std::string_view kProjectionConvention =
    "equirect-cube/v1 x-right y-down z-forward theta0=F faces=F,R,B,L,T,D";

std::string serialize_checkpoint(TrainState& state);
TrainState deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace pano
