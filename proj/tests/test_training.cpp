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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pano/checkpoint.hpp"
#include "pano/dataset.hpp"
#include "pano/training.hpp"

using namespace pano;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.face_size = 16;
  c.equirect_height = 16;
  c.batch_size = 2;
  c.generator_width = 4;
  c.critic_width = 4;
  c.max_steps = 4;
  c.checkpoint_interval = 2;
  c.seed = 11;
  return c;
}

const InMemorySource& small_data() {
  static const InMemorySource data(synthetic_dataset(3, PreprocessOptions{16, 16, kDefaultFill}, 5));
  return data;
}

CubeBatch<float> first_batch() {
  const auto& s = small_data().samples();
  return make_batch<float>(std::span(s.data(), 2));
}

std::vector<Tensor<float>> snapshot(const std::vector<NamedParameter<float>>& params) {
  std::vector<Tensor<float>> out;
  for (const auto& p : params) out.push_back(p.value.value());
  return out;
}

bool same(const std::vector<Tensor<float>>& a, const std::vector<Tensor<float>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i].array() == b[i].array()).all()) return false;
  return true;
}

Tensor<float> probe_output(TrainState& state) {
  NoGradGuard no_grad;
  const CubeBatch<float> b = first_batch();
  return generator_forward(state.generator, b.damaged, b.masks, ForwardContext{Mode::kEval, false, nullptr}).value();
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Loss log lines without the trailing wall-clock column.
std::vector<std::string> loss_rows(const fs::path& csv) {
  std::istringstream in(read_text(csv));
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) rows.push_back(line.substr(0, line.rfind(',')));
  return rows;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pano_test_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing and formatting") {
  std::istringstream in("# comment\nlearning_rate = 0.001\n batch_size=4  # trailing\n\nlambda2 = 5\n");
  const TrainConfig c = parse_train_config(in);
  CHECK(c.learning_rate == 0.001);
  CHECK(c.batch_size == 4);
  CHECK(c.weights.gradient_penalty == 5.0);
  CHECK(c.face_size == 256);

  std::istringstream round(format_train_config(small_config()));
  const TrainConfig back = parse_train_config(round);
  CHECK(format_train_config(back) == format_train_config(small_config()));

  TrainConfig bad;
  CHECK_THROWS_AS(bad.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(bad.set("batch_size", "two"), ConfigError);
  CHECK_THROWS_AS(bad.set("l1_reduction", "max"), ConfigError);
  std::istringstream no_eq("learning_rate 0.1\n");
  CHECK_THROWS_AS(parse_train_config(no_eq), ConfigError);

  auto invalid = [](auto edit) {
    TrainConfig t = small_config();
    edit(t);
    return t;
  };
  CHECK_THROWS_AS(invalid([](TrainConfig& t) { t.learning_rate = -1; }).validate(), ConfigError);
  CHECK_THROWS_AS(invalid([](TrainConfig& t) { t.batch_size = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(invalid([](TrainConfig& t) { t.face_size = 48; }).validate(), ConfigError);
  CHECK_THROWS_AS(invalid([](TrainConfig& t) { t.critic_steps_per_gen_step = 0; }).validate(), ConfigError);
  CHECK_THROWS_AS(invalid([](TrainConfig& t) { t.weights.l1 = -0.5; }).validate(), ConfigError);
  CHECK_THROWS_AS(TrainState(invalid([](TrainConfig& t) { t.fill = 2.0f; })), ConfigError);
}

TEST_CASE("generator depth follows the face size") {
  CHECK(TrainConfig{}.generator_config().depth == 7);
  CHECK(small_config().generator_config().depth == 4);
  TrainConfig c = small_config();
  c.face_size = 64;
  CHECK(c.generator_config().depth == 6);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  TrainConfig c = small_config();
  c.learning_rate = 0.0;
  TrainState state(c);
  const auto g = snapshot(state.generator.parameters());
  const auto w = snapshot(state.whole_critic.parameters());
  const auto s = snapshot(state.slice_critic.parameters());
  const StepReport r = train_step(first_batch(), state);
  CHECK(r.step == 1);
  CHECK(state.step == 1);
  CHECK(same(g, snapshot(state.generator.parameters())));
  CHECK(same(w, snapshot(state.whole_critic.parameters())));
  CHECK(same(s, snapshot(state.slice_critic.parameters())));
}

TEST_CASE("a step updates every network") {
  TrainState state(small_config());
  const auto g = snapshot(state.generator.parameters());
  const auto w = snapshot(state.whole_critic.parameters());
  const auto s = snapshot(state.slice_critic.parameters());
  const StepReport r = train_step(first_batch(), state);
  CHECK_FALSE(same(g, snapshot(state.generator.parameters())));
  CHECK_FALSE(same(w, snapshot(state.whole_critic.parameters())));
  CHECK_FALSE(same(s, snapshot(state.slice_critic.parameters())));
  CHECK(r.losses.g_l1 > 0.0);
  CHECK(r.losses.gp_whole >= 0.0);
  CHECK(r.losses.gp_slice >= 0.0);
}

TEST_CASE("critic updates do not touch the generator") {
  // With zero generator weights the generator gradient vanishes, so any
  // change to it could only come from the critic phase.
  TrainConfig c = small_config();
  c.weights.adversarial = 0.0;
  c.weights.l1 = 0.0;
  c.critic_steps_per_gen_step = 3;
  TrainState state(c);
  const auto g = snapshot(state.generator.parameters());
  const auto w = snapshot(state.whole_critic.parameters());
  train_step(first_batch(), state);
  CHECK(same(g, snapshot(state.generator.parameters())));
  CHECK_FALSE(same(w, snapshot(state.whole_critic.parameters())));
}

TEST_CASE("identical states give bit-identical steps") {
  TrainState a(small_config());
  TrainState b(small_config());
  for (int i = 0; i < 2; ++i) {
    const StepReport ra = train_step(first_batch(), a);
    const StepReport rb = train_step(first_batch(), b);
    CHECK(ra.losses.g_adv == rb.losses.g_adv);
    CHECK(ra.losses.g_l1 == rb.losses.g_l1);
    CHECK(ra.losses.d_whole == rb.losses.d_whole);
    CHECK(ra.losses.gp_slice == rb.losses.gp_slice);
  }
  CHECK(same(snapshot(a.generator.parameters()), snapshot(b.generator.parameters())));
  TrainConfig other = small_config();
  other.seed = 12;
  TrainState c(other);
  CHECK_FALSE(same(snapshot(a.generator.parameters()), snapshot(c.generator.parameters())));
}

TEST_CASE("batch validation") {
  TrainState state(small_config());
  CubeBatch<float> b = first_batch();
  b.masks = Tensor<float>({12, 1, 8, 8});
  CHECK_THROWS_AS(train_step(b, state), ValidationError);
  CubeBatch<float> c = first_batch();
  c.masks.array()(0) = 0.5f;
  CHECK_THROWS_AS(train_step(c, state), ValidationError);
  CHECK(state.step == 0);
}

TEST_CASE("batch order covers the dataset each pass") {
  TrainState state(small_config());
  std::vector<int> seen(3, 0);
  for (int i = 0; i < 3; ++i)
    for (std::size_t k : next_batch_indices(state, 3)) ++seen[k];
  CHECK(seen == std::vector<int>{2, 2, 2});
}

TEST_CASE("checkpoint round trip") {
  TrainState state(small_config());
  train_step(first_batch(), state);
  const std::string bytes = serialize_checkpoint(state);
  CHECK(bytes.substr(0, 8) == "PANO360C");
  TrainState back = deserialize_checkpoint(bytes);
  CHECK(back.step == 1);
  CHECK(format_train_config(back.config) == format_train_config(state.config));
  CHECK((probe_output(back).array() == probe_output(state).array()).all());
  CHECK(serialize_checkpoint(back) == bytes);

  // Both continue identically, optimizer moments and RNG streams included.
  const StepReport ra = train_step(first_batch(), state);
  const StepReport rb = train_step(first_batch(), back);
  CHECK(ra.losses.g_l1 == rb.losses.g_l1);
  CHECK(ra.losses.gp_whole == rb.losses.gp_whole);

  std::string wrong_version = bytes;
  wrong_version[8] = 2;
  CHECK_THROWS_AS(deserialize_checkpoint(wrong_version), ValidationError);
  std::string wrong_convention = bytes;
  const auto at = wrong_convention.find("theta0=F");
  REQUIRE(at != std::string::npos);
  wrong_convention[at + 7] = 'B';
  CHECK_THROWS_AS(deserialize_checkpoint(wrong_convention), ValidationError);
  CHECK_THROWS_AS(deserialize_checkpoint("PANO360X"), ValidationError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 4)), ValidationError);
}

TEST_CASE("training loop writes logs and checkpoints") {
  TempDir dir("loop");
  const TrainResult r = train(small_config(), small_data(), TrainOptions{dir.path, {}, {}});
  CHECK(r.completed);
  CHECK(r.error.empty());
  CHECK(r.log.size() == 4);
  CHECK(fs::exists(dir.path / "checkpoint_00000002.ckpt"));
  CHECK(fs::exists(dir.path / "checkpoint_00000004.ckpt"));
  CHECK(fs::exists(dir.path / "final.ckpt"));
  const auto rows = loss_rows(dir.path / "loss_log.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "step,g_adv,g_l1,d_whole,d_slice,gp_whole,gp_slice");
  CHECK(rows[4].rfind("4,", 0) == 0);
  std::istringstream jsonl(read_text(dir.path / "loss_log.jsonl"));
  std::string line;
  int count = 0;
  while (std::getline(jsonl, line)) count += line.rfind("{\"step\":", 0) == 0;
  CHECK(count == 4);
  CHECK(load_checkpoint(r.final_checkpoint).step == 4);
}

TEST_CASE("resume continues the run") {
  TempDir full("full"), split("split");
  TrainConfig c = small_config();
  train(c, small_data(), TrainOptions{full.path, {}, {}});

  TrainConfig half = c;
  half.max_steps = 2;
  train(half, small_data(), TrainOptions{split.path, {}, {}});
  const TrainResult resumed = train(c, small_data(), TrainOptions{split.path, split.path / "final.ckpt", {}});
  CHECK(resumed.completed);
  REQUIRE(resumed.log.size() == 2);
  CHECK(resumed.log.front().step == 3);
  CHECK(loss_rows(full.path / "loss_log.csv") == loss_rows(split.path / "loss_log.csv"));

  TrainState a = load_checkpoint(full.path / "final.ckpt");
  TrainState b = load_checkpoint(split.path / "final.ckpt");
  CHECK((probe_output(a).array() == probe_output(b).array()).all());
}

TEST_CASE("zero steps writes only the final checkpoint") {
  TempDir dir("zero");
  TrainConfig c = small_config();
  c.max_steps = 0;
  const TrainResult r = train(c, small_data(), TrainOptions{dir.path, {}, {}});
  CHECK(r.completed);
  CHECK(r.log.empty());
  int checkpoints = 0;
  for (const auto& e : fs::directory_iterator(dir.path)) checkpoints += e.path().extension() == ".ckpt";
  CHECK(checkpoints == 1);
  CHECK(load_checkpoint(dir.path / "final.ckpt").step == 0);
}

TEST_CASE("training errors") {
  TempDir dir("errors");
  CHECK_THROWS_AS(train(small_config(), InMemorySource({}), TrainOptions{dir.path, {}, {}}), ConfigError);

  // A directory in place of the final checkpoint makes the write fail.
  TrainConfig c = small_config();
  c.max_steps = 1;
  c.checkpoint_interval = 0;
  fs::create_directories(dir.path / "final.ckpt" / "occupied");
  const TrainResult r = train(c, small_data(), TrainOptions{dir.path, {}, {}});
  CHECK_FALSE(r.completed);
  CHECK_FALSE(r.error.empty());
  CHECK(r.log.size() == 1);

  CHECK_THROWS_AS(load_checkpoint(dir.path / "missing.ckpt"), IoError);
}

TEST_CASE("hole L1 of the dataset") {
  TrainState state(small_config());
  const double before = dataset_hole_l1(state, small_data());
  CHECK(before > 0.0);
  CHECK(dataset_hole_l1(state, small_data()) == before);
}
