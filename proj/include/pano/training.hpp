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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pano/networks.hpp"
#include "pano/objectives.hpp"
#include "pano/optim.hpp"
#include "pano/sample.hpp"

namespace pano {

/// Training hyperparameters. Config files use these member names as keys,
/// with lambda1/lambda2/lambda3 for the objective weights.
struct TrainConfig {
  double learning_rate = 4e-4;
  int batch_size = 8;
  Index face_size = 256;
  int critic_steps_per_gen_step = 1;
  std::int64_t max_steps = 1000;
  std::uint64_t seed = 0;
  ObjectiveWeights weights;
  std::int64_t checkpoint_interval = 500;

  // Model shape and data handling.
  Index generator_width = 64;
  int generator_depth = 0;  // 0: min(7, log2(face_size))
  Index critic_width = 64;
  Index equirect_height = 256;
  float fill = kDefaultFill;
  L1Reduction l1_reduction = L1Reduction::kMean;

  void validate() const;
  GeneratorConfig generator_config() const;
  CriticConfig whole_critic_config() const;
  CriticConfig slice_critic_config() const;

  /// Sets one field from its textual form. Throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// All fields in file order.
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

/// Parses `key = value` lines; '#' starts a comment.
TrainConfig parse_train_config(std::istream& in, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});
std::string format_train_config(const TrainConfig& config);

struct StepReport {
  std::int64_t step = 0;
  LossComponents losses;
  double wall_ms = 0.0;
};

/// Everything needed to continue training bit-exactly.
struct TrainState {
  explicit TrainState(const TrainConfig& config);
  TrainState(TrainState&&) = default;
  TrainState& operator=(TrainState&&) = delete;
  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  TrainConfig config;
  Generator<float> generator;
  Critic<float> whole_critic;
  Critic<float> slice_critic;
  Adam<float> generator_opt;
  Adam<float> whole_opt;
  Adam<float> slice_opt;
  Rng data_rng;
  Rng noise_rng;
  std::vector<std::size_t> order;  // current pass over the dataset
  std::size_t cursor = 0;
  std::int64_t step = 0;
};

/// Critic updates followed by one generator update on `batch`.
StepReport train_step(const CubeBatch<float>& batch, TrainState& state);

/// Next `batch_size` dataset indices, reshuffling after each full pass.
std::vector<std::size_t> next_batch_indices(TrainState& state, std::size_t dataset_size);

struct TrainOptions {
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> resume_from;
  std::function<void(const StepReport&)> on_step;
};

struct TrainResult {
  std::vector<StepReport> log;
  std::filesystem::path final_checkpoint;
  bool completed = false;
  std::string error;  // set when an output write failed
};

/// Runs steps until `config.max_steps`, writing checkpoints and the loss log
/// (loss_log.csv, loss_log.jsonl) into `options.output_dir`.
TrainResult train(const TrainConfig& config, const SampleSource& dataset, const TrainOptions& options);

/// Continues from `state` (fresh or restored) instead of building a new one.
TrainResult train(TrainState& state, const SampleSource& dataset, const TrainOptions& options);

/// Hole-region L1 of the evaluation-mode generator over a whole dataset, mean reduction.
double dataset_hole_l1(TrainState& state, const SampleSource& dataset);

}  // namespace pano
