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

#include "pano/checkpoint.hpp"

#include <cstring>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pano/file_util.hpp"

namespace pano {

namespace {

using nlohmann::json;

// Named view of every tensor the checkpoint carries.
struct Slot {
  std::string name;
  Tensor<float>* tensor;
};

std::vector<Slot> slots(TrainState& state) {
  std::vector<Slot> out;
  const auto add_params = [&out](const std::string& prefix, const std::vector<NamedParameter<float>>& params) {
    for (const auto& p : params) out.push_back({prefix + p.name, &p.value.node()->value});
  };
  const auto add_buffers = [&out](const std::string& prefix, const std::vector<NamedBuffer<float>>& buffers) {
    for (const auto& b : buffers) out.push_back({prefix + b.name, b.value});
  };
  const auto add_moments = [&out](const std::string& prefix, Adam<float>& opt) {
    const auto& params = opt.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      out.push_back({prefix + "m/" + params[i].name, &opt.first_moments()[i]});
      out.push_back({prefix + "v/" + params[i].name, &opt.second_moments()[i]});
    }
  };
  add_params("generator/", state.generator.parameters());
  add_buffers("generator/", state.generator.buffers());
  add_params("whole_critic/", state.whole_critic.parameters());
  add_buffers("whole_critic/", state.whole_critic.buffers());
  add_params("slice_critic/", state.slice_critic.parameters());
  add_buffers("slice_critic/", state.slice_critic.buffers());
  add_moments("generator_opt/", state.generator_opt);
  add_moments("whole_opt/", state.whole_opt);
  add_moments("slice_opt/", state.slice_opt);
  return out;
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng parse_rng(const std::string& text) {
  Rng rng;
  std::istringstream is(text);
  is >> rng;
  if (!is) throw ValidationError("checkpoint has a corrupt random-engine state");
  return rng;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::string serialize_checkpoint(TrainState& state) {
  json header;
  header["convention"] = std::string(kProjectionConvention);
  json config = json::object();
  for (const auto& [k, v] : state.config.to_key_values()) config[k] = v;
  header["config"] = config;
  header["step"] = state.step;
  header["rng"] = {{"data", rng_state(state.data_rng)}, {"noise", rng_state(state.noise_rng)}};
  header["order"] = state.order;
  header["cursor"] = state.cursor;
  header["optimizer_steps"] = {state.generator_opt.steps(), state.whole_opt.steps(), state.slice_opt.steps()};

  json table = json::array();
  std::size_t offset = 0;
  const auto all = slots(state);
  for (const auto& slot : all) {
    const Shape s = slot.tensor->shape();
    table.push_back({{"name", slot.name}, {"shape", {s[0], s[1], s[2], s[3]}}, {"offset", offset}});
    offset += static_cast<std::size_t>(slot.tensor->size());
  }
  header["tensors"] = table;
  header["payload_floats"] = offset;

  const std::string text = header.dump();
  std::string out(kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset * sizeof(float));
  for (const auto& slot : all)
    out.append(reinterpret_cast<const char*>(slot.tensor->data()), slot.tensor->size() * sizeof(float));
  return out;
}

TrainState deserialize_checkpoint(std::string_view bytes) {
  const std::size_t prefix = kCheckpointMagic.size() + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (bytes.size() < prefix || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic)
    throw ValidationError("not a checkpoint file");
  const auto version = get<std::uint32_t>(bytes, kCheckpointMagic.size());
  if (version != kCheckpointVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  const auto header_len = get<std::uint64_t>(bytes, kCheckpointMagic.size() + sizeof(std::uint32_t));
  if (header_len > bytes.size() - prefix) throw ValidationError("truncated checkpoint header");

  json header;
  try {
    header = json::parse(bytes.substr(prefix, header_len));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("corrupt checkpoint header: ") + e.what());
  }
  const std::string_view payload = bytes.substr(prefix + header_len);

  try {
    if (header.at("convention").get<std::string>() != kProjectionConvention)
      throw ValidationError("checkpoint uses projection convention '" + header.at("convention").get<std::string>() +
                            "', expected '" + std::string(kProjectionConvention) + "'");
    TrainConfig config;
    for (const auto& [k, v] : header.at("config").items()) config.set(k, v.get<std::string>());
    TrainState state(config);

    const std::size_t floats = header.at("payload_floats").get<std::size_t>();
    if (payload.size() != floats * sizeof(float)) throw ValidationError("checkpoint payload size mismatch");
    std::map<std::string, const json*> table;
    for (const auto& entry : header.at("tensors")) table[entry.at("name").get<std::string>()] = &entry;

    for (const auto& slot : slots(state)) {
      const auto it = table.find(slot.name);
      if (it == table.end()) throw ValidationError("checkpoint is missing tensor " + slot.name);
      const json& entry = *it->second;
      const auto dims = entry.at("shape").get<std::vector<Index>>();
      const Shape shape{dims.at(0), dims.at(1), dims.at(2), dims.at(3)};
      if (shape != slot.tensor->shape())
        throw ShapeError("tensor " + slot.name + " has shape " + to_string(shape) + ", model expects " +
                         to_string(slot.tensor->shape()));
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto count = static_cast<std::size_t>(slot.tensor->size());
      if (offset + count > floats) throw ValidationError("tensor " + slot.name + " exceeds the payload");
      std::memcpy(slot.tensor->data(), payload.data() + offset * sizeof(float), count * sizeof(float));
    }
    if (table.size() != slots(state).size()) throw ValidationError("checkpoint has unexpected tensors");

    state.step = header.at("step").get<std::int64_t>();
    state.data_rng = parse_rng(header.at("rng").at("data").get<std::string>());
    state.noise_rng = parse_rng(header.at("rng").at("noise").get<std::string>());
    state.order = header.at("order").get<std::vector<std::size_t>>();
    state.cursor = header.at("cursor").get<std::size_t>();
    const auto steps = header.at("optimizer_steps").get<std::vector<std::int64_t>>();
    if (steps.size() != 3) throw ValidationError("checkpoint optimizer state is malformed");
    state.generator_opt.set_steps(steps[0]);
    state.whole_opt.set_steps(steps[1]);
    state.slice_opt.set_steps(steps[2]);
    return state;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("checkpoint config is invalid: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, TrainState& state) {
  write_file_atomic(path, serialize_checkpoint(state));
}

TrainState load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace pano
