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

#include "pano/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <optional>
#include <ostream>

#include "pano/checkpoint.hpp"
#include "pano/evaluation.hpp"
#include "pano/file_util.hpp"
#include "pano/io.hpp"

namespace pano {

namespace {

namespace fs = std::filesystem;

const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const ShapeError*>(&e)) return "shape";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const ConfigError*>(&e)) return "config";
  if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  if (dynamic_cast<const IoError*>(&e)) return "io";
  if (dynamic_cast<const PreconditionError*>(&e)) return "precondition";
  return "internal";
}

struct DataArgs {
  std::string dir;
  std::string category = "all";
  std::string split = "train";
  int synthetic = 0;
  bool no_cache = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--data", dir, "Dataset directory of PNG/JPEG panoramas");
    cmd->add_option("--category", category, "all, buildings or scenery (first directory level)");
    cmd->add_option("--split", split, "train or eval");
    cmd->add_option("--synthetic", synthetic, "Use N synthetic panoramas instead of --data")->check(CLI::NonNegativeNumber);
  }

  std::unique_ptr<SampleSource> load(const PreprocessOptions& options, std::uint64_t seed, const fs::path& report_dir,
                                     std::ostream& out) const {
    if (synthetic > 0) return std::make_unique<InMemorySource>(synthetic_dataset(synthetic, options, seed));
    if (dir.empty()) throw ConfigError("either --data or --synthetic is required");
    DatasetManifest manifest = ingest(dir, IngestRules{parse_split(split), parse_category(category)});
    if (!manifest.skipped.empty()) {
      out << "skipped " << manifest.skipped.size() << " unreadable file(s)\n";
      if (!report_dir.empty()) write_file_atomic(report_dir / "skipped.csv", format_skip_report(manifest));
    }
    return std::make_unique<FileSource>(std::move(manifest), options, seed);
  }
};

RectSpec parse_rect(const std::string& text) {
  RectSpec r;
  long long v[4];
  char tail;
  if (std::sscanf(text.c_str(), "%lld,%lld,%lld,%lld%c", &v[0], &v[1], &v[2], &v[3], &tail) != 4)
    throw ConfigError("--rect expects x0,y0,width,height, got '" + text + "'");
  r.x0 = v[0];
  r.y0 = v[1];
  r.width = v[2];
  r.height = v[3];
  return r;
}

std::string format_step(const StepReport& r) {
  char buf[256];
  const auto& l = r.losses;
  std::snprintf(buf, sizeof buf,
                "step %lld  g_adv %.5f  g_l1 %.5f  d_whole %.5f  d_slice %.5f  gp_whole %.5f  gp_slice %.5f  %.0f ms\n",
                static_cast<long long>(r.step), l.g_adv, l.g_l1, l.d_whole, l.d_slice, l.gp_whole, l.gp_slice,
                r.wall_ms);
  return buf;
}

// ---------------------------------------------------------------------------

struct ConvertCmd {
  std::string to;
  std::string input;
  std::string output;
  Index face_size = 0;
  Index height = 0;
  bool mask = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("convert", "Convert between equirectangular and cube-map files");
    cmd->add_option("--to", to, "cubemap or equirect")->required()->check(CLI::IsMember({"cubemap", "equirect"}));
    cmd->add_option("--face-size", face_size, "Cube face size (default: equirect height)");
    cmd->add_option("--height", height, "Equirect height; width is twice this (default: face size)");
    cmd->add_flag("--mask", mask, "Treat files as binary masks (nearest-neighbour sampling)");
    cmd->add_option("input", input, "Input file; cube maps are a strip or a pattern with %s")->required();
    cmd->add_option("output", output, "Output file; a pattern with %s writes one file per face")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    if (to == "cubemap") {
      const Image src = mask ? read_mask(input) : read_image(input);
      validate_equirect(src);
      const Index s = face_size > 0 ? face_size : src.height();
      const CubeMap cube = mask ? mask_to_cubemap(src, s) : equirect_to_cubemap(src, s);
      write_cubemap(output, cube);
    } else {
      CubeMap cube = read_cubemap(input);
      if (mask)
        for (auto& f : cube.faces) {
          Mask m(f.width(), f.height(), 1);
          for (Index y = 0; y < f.height(); ++y)
            for (Index x = 0; x < f.width(); ++x) m(x, y) = f(x, y, 0) >= 0.5f ? 1.0f : 0.0f;
          f = m;
        }
      const Index h = height > 0 ? height : cube.face_size();
      if (mask) write_mask(output, cubemask_to_equirect(cube, 2 * h, h));
      else write_image(output, cubemap_to_equirect(cube, 2 * h, h));
    }
  }
};

struct MaskCmd {
  Index width = 512;
  Index height = 256;
  std::uint64_t seed = 0;
  int count = 1;
  std::string out_dir;
  Index face_size = 0;
  std::ostream* out = nullptr;

  void add(CLI::App& app, std::ostream& o) {
    out = &o;
    auto* cmd = app.add_subcommand("mask", "Sample rectangular hole masks");
    cmd->add_option("--width", width, "Equirect width");
    cmd->add_option("--height", height, "Equirect height");
    cmd->add_option("--seed", seed, "Seed; mask i uses the same per-image seed as dataset image i");
    cmd->add_option("--count", count, "Number of masks")->check(CLI::PositiveNumber);
    cmd->add_option("--face-size", face_size, "Also write cube-map masks at this face size");
    cmd->add_option("--out", out_dir, "Output directory")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    fs::create_directories(out_dir);
    std::string rects = "index,x0,y0,width,height\n";
    for (int i = 0; i < count; ++i) {
      Rng rng(sample_seed(seed, static_cast<std::size_t>(i)));
      const RectMask m = sample_rect_mask(rng, width, height);
      char name[64];
      std::snprintf(name, sizeof name, "mask_%04d.png", i);
      write_mask(fs::path(out_dir) / name, m.mask);
      if (face_size > 0) {
        std::snprintf(name, sizeof name, "mask_%04d_%%s.png", i);
        write_cubemap(fs::path(out_dir) / name, mask_to_cubemap(m.mask, face_size));
      }
      rects += std::to_string(i) + "," + std::to_string(m.rect.x0) + "," + std::to_string(m.rect.y0) + "," +
               std::to_string(m.rect.width) + "," + std::to_string(m.rect.height) + "\n";
    }
    write_file_atomic(fs::path(out_dir) / "rects.csv", rects);
    *out << "wrote " << count << " mask(s) to " << out_dir << "\n";
  }
};

struct TrainCmd {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::optional<std::string>>> flags{
      {"learning_rate", {}}, {"batch_size", {}},      {"face_size", {}},       {"max_steps", {}},
      {"seed", {}},          {"checkpoint_interval", {}}, {"critic_steps_per_gen_step", {}}, {"generator_width", {}},
      {"critic_width", {}},  {"equirect_height", {}}};
  DataArgs data;
  std::string out_dir;
  std::string resume;
  int log_every = 10;
  std::ostream* out = nullptr;

  void add(CLI::App& app, std::ostream& o) {
    out = &o;
    auto* cmd = app.add_subcommand("train", "Train the inpainting networks");
    cmd->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "Override a config key (key=value), repeatable");
    for (auto& [key, value] : flags) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      cmd->add_option(flag, value, "Config override for " + key);
    }
    data.add(cmd);
    cmd->add_option("--out", out_dir, "Output directory for logs and checkpoints")->required();
    cmd->add_option("--resume", resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
    cmd->add_option("--log-every", log_every, "Print every N steps (0: silent)");
    cmd->callback([this] { run(); });
  }

  TrainConfig resolve() const {
    TrainConfig cfg = config_path.empty() ? TrainConfig{} : load_train_config(config_path);
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    for (const auto& [key, value] : flags)
      if (value) cfg.set(key, *value);
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    cfg.validate();
    return cfg;
  }

  void run() const {
    const TrainConfig cfg = resolve();
    fs::create_directories(out_dir);
    write_file_atomic(fs::path(out_dir) / "config.txt", format_train_config(cfg));
    const PreprocessOptions pre{cfg.face_size, cfg.equirect_height, cfg.fill};
    const auto dataset = data.load(pre, cfg.seed, out_dir, *out);
    TrainOptions options;
    options.output_dir = out_dir;
    if (!resume.empty()) options.resume_from = fs::path(resume);
    const int every = log_every;
    std::ostream& o = *out;
    options.on_step = [every, &o](const StepReport& r) {
      if (every > 0 && r.step % every == 0) o << format_step(r) << std::flush;
    };
    const TrainResult result = train(cfg, *dataset, options);
    if (!result.completed) throw IoError("training aborted: " + result.error);
    o << "final checkpoint: " << result.final_checkpoint.string() << "\n";
  }
};

struct InferCmd {
  std::string checkpoint;
  std::string input;
  std::string mask_path;
  std::string rect;
  std::string output;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("infer", "Inpaint a damaged equirect panorama");
    cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
    cmd->add_option("--input", input, "Damaged equirect panorama")->required()->check(CLI::ExistingFile);
    auto* m = cmd->add_option("--mask", mask_path, "Mask PNG (0 = hole, 255 = valid)")->check(CLI::ExistingFile);
    auto* r = cmd->add_option("--rect", rect, "Hole rectangle x0,y0,width,height");
    m->excludes(r);
    cmd->add_option("--output", output, "Output file")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    TrainState state = load_checkpoint(checkpoint);
    const Image damaged = read_image(input);
    validate_equirect(damaged);
    Mask mask;
    if (!mask_path.empty()) mask = read_mask(mask_path);
    else if (!rect.empty()) mask = rect_mask(damaged.width(), damaged.height(), parse_rect(rect));
    else throw ConfigError("infer needs --mask or --rect");
    const Image result =
        inpaint_equirect(state.generator, damaged, mask, state.config.face_size, state.config.fill);
    write_image(output, result);
  }
};

// Shared by evaluate and grid: pick the inpainter and the dataset.
struct ModelArgs {
  std::string checkpoint;
  std::string stub;
  std::optional<Index> face_size;
  std::optional<Index> equirect_height;
  std::uint64_t seed = 0;
  DataArgs data;

  void add(CLI::App* cmd) {
    auto* c = cmd->add_option("--checkpoint", checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
    auto* s = cmd->add_option("--stub", stub, "Baseline inpainter instead of a checkpoint: identity or gray")
                  ->check(CLI::IsMember({"identity", "gray"}));
    c->excludes(s);
    cmd->add_option("--face-size", face_size, "Cube face size (must match the checkpoint)");
    cmd->add_option("--equirect-height", equirect_height, "Equirect height after resizing");
    cmd->add_option("--seed", seed, "Hole seed");
    data.add(cmd);
  }

  struct Loaded {
    std::optional<TrainState> state;
    std::unique_ptr<Inpainter> inpainter;
    std::unique_ptr<SampleSource> dataset;
    PreprocessOptions options;
  };

  Loaded load(const fs::path& report_dir, std::ostream& out) const {
    Loaded l;
    if (!checkpoint.empty()) {
      l.state.emplace(load_checkpoint(checkpoint));
      const TrainConfig& cfg = l.state->config;
      if (face_size && *face_size != cfg.face_size)
        throw ValidationError("checkpoint/config mismatch: checkpoint face size is " + std::to_string(cfg.face_size) +
                              ", requested " + std::to_string(*face_size));
      l.options = {cfg.face_size, equirect_height.value_or(cfg.equirect_height), cfg.fill};
      l.inpainter = std::make_unique<GeneratorInpainter>(l.state->generator, cfg.face_size, cfg.fill);
    } else if (!stub.empty()) {
      l.options = {face_size.value_or(256), equirect_height.value_or(256), kDefaultFill};
      if (stub == "identity") l.inpainter = std::make_unique<IdentityInpainter>();
      else l.inpainter = std::make_unique<FillInpainter>(kDefaultFill);
    } else {
      throw ConfigError("either --checkpoint or --stub is required");
    }
    l.dataset = data.load(l.options, seed, report_dir, out);
    return l;
  }
};

std::vector<std::array<Image, 3>> grid_rows(const ModelArgs::Loaded& l, std::size_t limit) {
  std::vector<std::array<Image, 3>> rows;
  for (std::size_t i = 0; i < std::min(limit, l.dataset->size()); ++i) {
    const TrainingSample s = l.dataset->load(i);
    rows.push_back({apply_mask(s.equirect, s.equirect_mask, l.options.fill), l.inpainter->inpaint(s), s.equirect});
  }
  return rows;
}

struct EvaluateCmd {
  ModelArgs model;
  std::string domain = "equirect";
  std::string out_dir;
  std::string grid;
  std::size_t grid_limit = 4;
  std::ostream* out = nullptr;

  void add(CLI::App& app, std::ostream& o) {
    out = &o;
    auto* cmd = app.add_subcommand("evaluate", "Compute SSIM, PSNR, L1 and L2 over a dataset");
    model.add(cmd);
    cmd->add_option("--domain", domain, "equirect or cubemap")->check(CLI::IsMember({"equirect", "cubemap"}));
    cmd->add_option("--out", out_dir, "Report directory (metrics.csv, metrics.json)")->required();
    cmd->add_option("--grid", grid, "Also write a comparison grid PNG");
    cmd->add_option("--grid-limit", grid_limit, "Rows in the comparison grid");
    cmd->callback([this] { run(); });
  }

  void run() const {
    fs::create_directories(out_dir);
    const auto loaded = model.load(out_dir, *out);
    EvaluateOptions options;
    options.domain = domain == "cubemap" ? MetricDomain::kCubemap : MetricDomain::kEquirect;
    options.face_size = loaded.options.face_size;
    const EvaluationReport report = evaluate(*loaded.inpainter, *loaded.dataset, options);
    write_file_atomic(fs::path(out_dir) / "metrics.csv", format_metrics_csv(report));
    write_file_atomic(fs::path(out_dir) / "metrics.json", format_metrics_json(report));
    if (!grid.empty()) write_image(grid, comparison_grid(grid_rows(loaded, grid_limit)));
    const MetricsRow& s = report.summary;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu images (%s): SSIM %.4f  PSNR %.2f dB  L1 %.3f  L2 %.3f\n", report.rows.size(),
                  domain_name(report.domain), s.ssim, s.psnr, s.l1, s.l2);
    *out << buf;
  }
};

struct GridCmd {
  ModelArgs model;
  std::vector<std::string> rows;
  std::size_t limit = 4;
  std::string output;
  std::ostream* out = nullptr;

  void add(CLI::App& app, std::ostream& o) {
    out = &o;
    auto* cmd = app.add_subcommand("grid", "Write a (masked input | inpainted | ground truth) comparison PNG");
    model.add(cmd);
    cmd->add_option("--row", rows, "Explicit row masked,inpainted,truth (repeatable)");
    cmd->add_option("--limit", limit, "Rows taken from the dataset");
    cmd->add_option("--output", output, "Output PNG")->required();
    cmd->callback([this] { run(); });
  }

  void run() const {
    std::vector<std::array<Image, 3>> grid;
    if (!rows.empty()) {
      for (const std::string& row : rows) {
        std::array<std::string, 3> paths;
        std::size_t start = 0;
        for (int i = 0; i < 3; ++i) {
          const auto comma = row.find(',', start);
          if ((i < 2) != (comma != std::string::npos)) throw ConfigError("--row expects three comma-separated paths");
          paths[i] = row.substr(start, i < 2 ? comma - start : std::string::npos);
          start = comma + 1;
        }
        grid.push_back({read_image(paths[0]), read_image(paths[1]), read_image(paths[2])});
      }
    } else {
      grid = grid_rows(model.load({}, *out), limit);
    }
    write_image(output, comparison_grid(grid));
  }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cube-map panorama inpainting toolkit", "pano360"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  ConvertCmd convert;
  MaskCmd mask;
  TrainCmd train_cmd;
  InferCmd infer;
  EvaluateCmd evaluate_cmd;
  GridCmd grid;
  convert.add(app);
  mask.add(app, out);
  train_cmd.add(app, out);
  infer.add(app);
  evaluate_cmd.add(app, out);
  grid.add(app, out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  } catch (const Error& e) {
    err << "error: " << error_kind(e) << ": " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: io: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pano
