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

#include "pano/training.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>

#include "pano/checkpoint.hpp"
#include "pano/file_util.hpp"

namespace pano {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError("invalid value '" + text + "' for " + key);
  return value;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

Rng derived_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
  return Rng(seq);
}

bool is_power_of_two(Index v) { return v > 0 && (v & (v - 1)) == 0; }

// [N, 6, S, S] stacked face masks to [N, 18, S, S] (each mask repeated over RGB).
Tensor<float> expand_stacked_masks(const Tensor<float>& masks) {
  const auto [n, faces, h, w] = masks.shape();
  Tensor<float> out(Shape{n, 3 * faces, h, w});
  const Index plane = h * w;
  for (Index i = 0; i < n; ++i)
    for (Index f = 0; f < faces; ++f)
      for (Index c = 0; c < 3; ++c)
        std::copy_n(masks.data() + masks.offset(i, f, 0, 0), plane, out.data() + out.offset(i, 3 * f + c, 0, 0));
  return out;
}

Tensor<float> batch_slice(const Tensor<float>& t, Index start, Index count) {
  const Index per_item = t.size() / t.dim(0);
  Shape shape = t.shape();
  shape[0] = count;
  return Tensor<float>(shape, t.array().segment(start * per_item, count * per_item));
}

Tensor<float> to_network(const Tensor<float>& t) { return Tensor<float>(t.shape(), t.array() * 2.0f - 1.0f); }

std::vector<Variable<float>> parameter_grads(const Variable<float>& loss, const Adam<float>& opt) {
  const std::vector<Variable<float>> params = opt.variables();
  return grad<float>(loss, params);
}

void check_batch(const CubeBatch<float>& batch, const TrainConfig& config) {
  const Shape expected{batch.truth.dim(0), 3, config.face_size, config.face_size};
  if (batch.truth.shape() != expected || batch.damaged.shape() != expected ||
      batch.masks.shape() != Shape{expected[0], 1, config.face_size, config.face_size} || expected[0] % 6 != 0 ||
      expected[0] == 0)
    throw ValidationError("batch does not match the configured face size " + std::to_string(config.face_size) + ": " +
                          to_string(batch.truth.shape()));
  if (((batch.masks.array() != 0.0f) && (batch.masks.array() != 1.0f)).any())
    throw ValidationError("batch masks must be binary");
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be non-negative");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (critic_steps_per_gen_step < 1) throw ConfigError("critic_steps_per_gen_step must be at least 1");
  if (!is_power_of_two(face_size) || face_size < 16) throw ConfigError("face_size must be a power of two >= 16");
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be non-negative");
  if (generator_width < 1 || critic_width < 1) throw ConfigError("network widths must be positive");
  if (generator_depth < 0) throw ConfigError("generator_depth must be non-negative");
  if (equirect_height < 8) throw ConfigError("equirect_height must be at least 8");
  if (!(fill >= 0.0f && fill <= 1.0f)) throw ConfigError("fill must lie in [0, 1]");
  weights.validate();
  generator_config().validate();
  if (face_size < generator_config().min_face_size())
    throw ConfigError("face_size " + std::to_string(face_size) + " is too small for generator depth " +
                      std::to_string(generator_config().depth));
}

GeneratorConfig TrainConfig::generator_config() const {
  GeneratorConfig g = GeneratorConfig::for_face_size(face_size);
  g.base_width = generator_width;
  if (generator_depth > 0) {
    g.depth = generator_depth;
    g.dropout_layers = std::min(2, generator_depth - 1);
  }
  return g;
}

CriticConfig TrainConfig::whole_critic_config() const {
  CriticConfig c = CriticConfig::whole(face_size);
  c.base_width = critic_width;
  return c;
}

CriticConfig TrainConfig::slice_critic_config() const {
  CriticConfig c = CriticConfig::slice(face_size);
  c.base_width = critic_width;
  return c;
}

void TrainConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "learning_rate") learning_rate = parse_number<double>(key, value);
  else if (key == "batch_size") batch_size = parse_number<int>(key, value);
  else if (key == "face_size") face_size = parse_number<Index>(key, value);
  else if (key == "critic_steps_per_gen_step") critic_steps_per_gen_step = parse_number<int>(key, value);
  else if (key == "max_steps") max_steps = parse_number<std::int64_t>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "lambda1") weights.adversarial = parse_number<double>(key, value);
  else if (key == "lambda2") weights.gradient_penalty = parse_number<double>(key, value);
  else if (key == "lambda3") weights.l1 = parse_number<double>(key, value);
  else if (key == "checkpoint_interval") checkpoint_interval = parse_number<std::int64_t>(key, value);
  else if (key == "generator_width") generator_width = parse_number<Index>(key, value);
  else if (key == "generator_depth") generator_depth = parse_number<int>(key, value);
  else if (key == "critic_width") critic_width = parse_number<Index>(key, value);
  else if (key == "equirect_height") equirect_height = parse_number<Index>(key, value);
  else if (key == "fill") fill = parse_number<float>(key, value);
  else if (key == "l1_reduction") {
    if (value == "mean") l1_reduction = L1Reduction::kMean;
    else if (value == "sum") l1_reduction = L1Reduction::kSum;
    else throw ConfigError("l1_reduction must be 'mean' or 'sum'");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_key_values() const {
  return {
      {"learning_rate", format_double(learning_rate)},
      {"batch_size", std::to_string(batch_size)},
      {"face_size", std::to_string(face_size)},
      {"critic_steps_per_gen_step", std::to_string(critic_steps_per_gen_step)},
      {"max_steps", std::to_string(max_steps)},
      {"seed", std::to_string(seed)},
      {"lambda1", format_double(weights.adversarial)},
      {"lambda2", format_double(weights.gradient_penalty)},
      {"lambda3", format_double(weights.l1)},
      {"checkpoint_interval", std::to_string(checkpoint_interval)},
      {"generator_width", std::to_string(generator_width)},
      {"generator_depth", std::to_string(generator_depth)},
      {"critic_width", std::to_string(critic_width)},
      {"equirect_height", std::to_string(equirect_height)},
      {"fill", format_double(fill)},
      {"l1_reduction", l1_reduction == L1Reduction::kMean ? "mean" : "sum"},
  };
}

TrainConfig parse_train_config(std::istream& in, TrainConfig config) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return config;
}

TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_train_config(in, std::move(base));
}

std::string format_train_config(const TrainConfig& config) {
  std::string out;
  for (const auto& [k, v] : config.to_key_values()) out += k + " = " + v + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// State

TrainState::TrainState(const TrainConfig& cfg)
    : config((cfg.validate(), cfg)),
      generator(cfg.generator_config()),
      whole_critic(cfg.whole_critic_config()),
      slice_critic(cfg.slice_critic_config()),
      generator_opt(generator.parameters(), {cfg.learning_rate, 0.5, 0.9, 1e-8}),
      whole_opt(whole_critic.parameters(), {cfg.learning_rate, 0.5, 0.9, 1e-8}),
      slice_opt(slice_critic.parameters(), {cfg.learning_rate, 0.5, 0.9, 1e-8}),
      data_rng(derived_rng(cfg.seed, 1)),
      noise_rng(derived_rng(cfg.seed, 2)) {
  Rng init = derived_rng(cfg.seed, 0);
  generator.reset_parameters(init);
  whole_critic.reset_parameters(init);
  slice_critic.reset_parameters(init);
}

std::vector<std::size_t> next_batch_indices(TrainState& state, std::size_t dataset_size) {
  if (dataset_size == 0) throw ConfigError("dataset is empty");
  if (state.order.size() != dataset_size) {
    state.order.clear();
    state.cursor = dataset_size;
  }
  std::vector<std::size_t> indices;
  while (indices.size() < static_cast<std::size_t>(state.config.batch_size)) {
    if (state.cursor >= state.order.size()) {
      state.order.resize(dataset_size);
      for (std::size_t i = 0; i < dataset_size; ++i) state.order[i] = i;
      std::shuffle(state.order.begin(), state.order.end(), state.data_rng);
      state.cursor = 0;
    }
    indices.push_back(state.order[state.cursor++]);
  }
  return indices;
}

// ---------------------------------------------------------------------------
// Step

StepReport train_step(const CubeBatch<float>& batch, TrainState& state) {
  const auto start = std::chrono::steady_clock::now();
  const TrainConfig& cfg = state.config;
  check_batch(batch, cfg);
  const Index n = batch.panoramas();

  const Tensor<float> real_net = to_network(batch.truth);
  const Variable<float> real_faces = constant(real_net);
  const Tensor<float> stacked_masks = stack_faces(constant(batch.masks)).value();
  const Tensor<float> stacked_hole_masks = expand_stacked_masks(stacked_masks);
  const Tensor<float> real_stacked = stack_faces(real_faces).value();

  StepReport report;
  report.step = state.step + 1;
  LossComponents& losses = report.losses;

  const ForwardContext critic_ctx{Mode::kTrain, true, nullptr};
  const ForwardContext probe_ctx{Mode::kTrain, false, nullptr};

  for (int k = 0; k < cfg.critic_steps_per_gen_step; ++k) {
    Tensor<float> fake_net;
    {
      NoGradGuard no_grad;
      const ForwardContext gen_ctx{Mode::kTrain, false, &state.noise_rng};
      const Variable<float> generated = generator_forward(state.generator, batch.damaged, batch.masks, gen_ctx);
      fake_net = to_network(composite(generated, batch.damaged, batch.masks).value());
    }
    const Variable<float> fake_faces = constant(fake_net);

    // Whole critic: one 24-channel stack per panorama.
    {
      const Variable<float> s_real = whole_critic_forward(state.whole_critic, real_faces, batch.masks, critic_ctx);
      const Variable<float> s_fake = whole_critic_forward(state.whole_critic, fake_faces, batch.masks, critic_ctx);
      const Variable<float> w = critic_loss(s_real, s_fake);
      Critic<float>& critic = state.whole_critic;
      const CriticFn<float> fn = [&critic, &stacked_masks, &probe_ctx](const Variable<float>& x) {
        return critic.forward(whole_critic_input_stacked(x, stacked_masks), probe_ctx);
      };
      const Variable<float> gp = masked_gradient_penalty<float>(fn, real_stacked, stack_faces(fake_faces).value(),
                                                                stacked_hole_masks, state.noise_rng);
      losses.d_whole = w.item();
      losses.gp_whole = gp.item();
      require_finite(losses.d_whole, "d_whole");
      require_finite(losses.gp_whole, "gp_whole");
      state.whole_opt.step(parameter_grads(critic_objective(w, gp, cfg.weights), state.whole_opt));
    }

    // Slice critic: shared weights over the six faces.
    {
      const Variable<float> s_real = slice_critic_forward(state.slice_critic, real_faces, batch.masks, critic_ctx);
      const Variable<float> s_fake = slice_critic_forward(state.slice_critic, fake_faces, batch.masks, critic_ctx);
      const Variable<float> w = critic_loss(s_real, s_fake);
      Variable<float> gp_total;
      for (Index f = 0; f < 6; ++f) {
        const Tensor<float> mask_f = batch_slice(batch.masks, f * n, n);
        Critic<float>& critic = state.slice_critic;
        const CriticFn<float> fn = [&critic, &mask_f, &probe_ctx](const Variable<float>& x) {
          const std::vector<Variable<float>> parts{x, constant(mask_f)};
          return critic.forward(concat<float>(parts, 1), probe_ctx);
        };
        const Variable<float> gp_f = masked_gradient_penalty<float>(fn, batch_slice(real_net, f * n, n),
                                                                    batch_slice(fake_net, f * n, n), mask_f,
                                                                    state.noise_rng);
        gp_total = gp_total.defined() ? add(gp_total, gp_f) : gp_f;
      }
      const Variable<float> gp = scale(gp_total, 1.0f / 6.0f);
      losses.d_slice = w.item();
      losses.gp_slice = gp.item();
      require_finite(losses.d_slice, "d_slice");
      require_finite(losses.gp_slice, "gp_slice");
      state.slice_opt.step(parameter_grads(critic_objective(w, gp, cfg.weights), state.slice_opt));
    }
  }

  // Generator update; critics are evaluated without touching their state.
  {
    const ForwardContext gen_ctx{Mode::kTrain, true, &state.noise_rng};
    const Variable<float> generated = generator_forward(state.generator, batch.damaged, batch.masks, gen_ctx);
    const Variable<float> fake = to_network_range(composite(generated, batch.damaged, batch.masks));
    const Variable<float> s_whole = whole_critic_forward(state.whole_critic, fake, batch.masks, probe_ctx);
    const Variable<float> s_slice = slice_critic_forward(state.slice_critic, fake, batch.masks, probe_ctx);
    const Variable<float> adv = add(generator_adversarial_loss(s_whole), generator_adversarial_loss(s_slice));
    const Variable<float> l1 = masked_l1(generated, batch.truth, batch.masks, cfg.l1_reduction);
    losses.g_adv = adv.item();
    losses.g_l1 = l1.item();
    total_objective(losses, cfg.weights);  // throws on any non-finite term
    state.generator_opt.step(parameter_grads(generator_objective(adv, l1, cfg.weights), state.generator_opt));
  }

  state.step = report.step;
  report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---------------------------------------------------------------------------
// Loop

namespace {

const char* const kCsvHeader = "step,g_adv,g_l1,d_whole,d_slice,gp_whole,gp_slice,wall_ms\n";

std::string csv_row(const StepReport& r) {
  char buf[512];
  const auto& l = r.losses;
  std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f\n", static_cast<long long>(r.step), l.g_adv,
                l.g_l1, l.d_whole, l.d_slice, l.gp_whole, l.gp_slice, r.wall_ms);
  return buf;
}

std::string json_row(const StepReport& r) {
  char buf[512];
  const auto& l = r.losses;
  std::snprintf(buf, sizeof buf,
                "{\"step\":%lld,\"g_adv\":%.9g,\"g_l1\":%.9g,\"d_whole\":%.9g,\"d_slice\":%.9g,\"gp_whole\":%.9g,"
                "\"gp_slice\":%.9g,\"wall_ms\":%.3f}\n",
                static_cast<long long>(r.step), l.g_adv, l.g_l1, l.d_whole, l.d_slice, l.gp_whole, l.gp_slice, r.wall_ms);
  return buf;
}

std::string checkpoint_name(std::int64_t step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "checkpoint_%08lld.ckpt", static_cast<long long>(step));
  return buf;
}

// Serialises on the caller's thread; the file write overlaps the next steps.
class CheckpointWriter {
 public:
  void submit(const std::filesystem::path& path, TrainState& state) {
    wait();
    std::string bytes = serialize_checkpoint(state);
    pending_ = std::async(std::launch::async, [path, bytes = std::move(bytes)] { write_file_atomic(path, bytes); });
  }
  void wait() {
    if (pending_.valid()) pending_.get();
  }
  ~CheckpointWriter() {
    try {
      wait();
    } catch (...) {
    }
  }

 private:
  std::future<void> pending_;
};

}  // namespace

TrainResult train(const TrainConfig& config, const SampleSource& dataset, const TrainOptions& options) {
  if (options.resume_from) {
    TrainState state = load_checkpoint(*options.resume_from);
    state.config.max_steps = config.max_steps;
    state.config.checkpoint_interval = config.checkpoint_interval;
    return train(state, dataset, options);
  }
  TrainState state(config);
  return train(state, dataset, options);
}

TrainResult train(TrainState& state, const SampleSource& dataset, const TrainOptions& options) {
  if (dataset.size() == 0) throw ConfigError("dataset is empty");
  TrainResult result;
  const auto& dir = options.output_dir;
  try {
    std::filesystem::create_directories(dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(std::string("cannot create output directory: ") + e.what());
  }

  const bool fresh = state.step == 0;
  const auto csv_path = dir / "loss_log.csv";
  const auto jsonl_path = dir / "loss_log.jsonl";
  const auto mode = fresh ? std::ios::trunc : std::ios::app;
  const bool need_header = fresh || !std::filesystem::exists(csv_path);
  std::ofstream csv(csv_path, std::ios::out | mode);
  std::ofstream jsonl(jsonl_path, std::ios::out | mode);
  if (!csv || !jsonl) throw IoError("cannot open loss logs in " + dir.string());
  if (need_header) csv << kCsvHeader;

  CheckpointWriter writer;
  try {
    while (state.step < state.config.max_steps) {
      const auto indices = next_batch_indices(state, dataset.size());
      std::vector<TrainingSample> samples;
      samples.reserve(indices.size());
      for (std::size_t i : indices) samples.push_back(dataset.load(i));
      const StepReport report = train_step(make_batch<float>(samples), state);
      result.log.push_back(report);
      csv << csv_row(report) << std::flush;
      jsonl << json_row(report) << std::flush;
      if (!csv || !jsonl) throw IoError("failed writing loss logs");
      if (options.on_step) options.on_step(report);
      if (state.config.checkpoint_interval > 0 && state.step % state.config.checkpoint_interval == 0)
        writer.submit(dir / checkpoint_name(state.step), state);
    }
    result.final_checkpoint = dir / "final.ckpt";
    writer.submit(result.final_checkpoint, state);
    writer.wait();
    result.completed = true;
  } catch (const IoError& e) {
    result.error = e.what();
    result.completed = false;
  }
  return result;
}

double dataset_hole_l1(TrainState& state, const SampleSource& dataset) {
  NoGradGuard no_grad;
  const ForwardContext ctx{Mode::kEval, false, nullptr};
  double total = 0.0;
  double holes = 0.0;
  const std::size_t batch = static_cast<std::size_t>(state.config.batch_size);
  for (std::size_t begin = 0; begin < dataset.size(); begin += batch) {
    std::vector<TrainingSample> samples;
    for (std::size_t i = begin; i < std::min(dataset.size(), begin + batch); ++i) samples.push_back(dataset.load(i));
    const CubeBatch<float> b = make_batch<float>(samples);
    const Variable<float> generated = generator_forward(state.generator, b.damaged, b.masks, ctx);
    const Tensor<float> hole = expand_channels(b.masks, 3);
    const auto weights = (1.0f - hole.array()).cast<double>();
    total += ((generated.value().array() - b.truth.array()).abs().cast<double>() * weights).sum();
    holes += weights.sum();
  }
  return holes > 0.0 ? total / holes : 0.0;
}

}  // namespace pano
