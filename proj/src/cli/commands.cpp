// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/cli/commands.hpp"

#include <png.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "ngi/io/files.hpp"
#include "ngi/io/pfm.hpp"
#include "ngi/scenegen/scene.hpp"
#include "ngi/trainer/checkpoint.hpp"

namespace ngi {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kSceneStream = 0x5ce1;
constexpr std::uint64_t kViewStream = 0x71e3;
constexpr std::uint64_t kRenderStream = 0x4e4d;
constexpr std::uint64_t kSplitStream = 0x5b17;

template <typename V>
void read(const Json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void check_keys(const Json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ConfigError(std::string("unknown ") + what + " config key '" + k + "'");
  }
}

fs::path manifest_path(const fs::path& data) {
  return fs::is_directory(data) ? data / "manifest.json" : data;
}

std::string frame_id(std::int64_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%05lld", static_cast<long long>(i));
  return buf;
}

void require_resolution(const ModelConfig& m, const Dataset& ds) {
  if (m.height != ds.height() || m.width != ds.width()) {
    throw ConfigError("checkpoint resolution " + std::to_string(m.width) + "x" +
                      std::to_string(m.height) + " does not match dataset resolution " +
                      std::to_string(ds.width()) + "x" + std::to_string(ds.height()));
  }
}

Json state_config(const TrainState& s) {
  return {{"model", to_json(s.model.config)}, {"train", to_json(s.config)}};
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const NumericalError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const DatasetError*>(&e) || dynamic_cast<const PfmError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const CheckpointError*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kExitData;
  }
  return kExitFailure;
}

void GenDataConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("data config: " + m); };
  if (resolution < 8) fail("resolution must be >= 8");
  if (spp < 1) fail("spp must be >= 1");
  if (max_bounces < 1) fail("max_bounces must be >= 1");
  if (frames < 0) fail("frames must be >= 0");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) fail("test_fraction must be in [0, 1)");
  if (scene != "random" && scene != "long_range") fail("scene must be 'random' or 'long_range'");
  if (!(colored_light_probability >= 0.0 && colored_light_probability <= 1.0)) {
    fail("colored_light_probability must be in [0, 1]");
  }
  if (views_per_scene < 1) fail("views_per_scene must be >= 1");
  if (filter.probe_size < 2) fail("filter.probe_size must be >= 2");
}

Json to_json(const GenDataConfig& c) {
  return {{"resolution", c.resolution},
          {"spp", c.spp},
          {"max_bounces", c.max_bounces},
          {"frames", c.frames},
          {"test_fraction", c.test_fraction},
          {"seed", c.seed},
          {"scene", c.scene},
          {"colored_light_probability", c.colored_light_probability},
          {"filter",
           {{"min_mean_depth", c.filter.min_mean_depth},
            {"min_depth_var", c.filter.min_depth_var},
            {"max_dark_fraction", c.filter.max_dark_fraction},
            {"probe_size", c.filter.probe_size}}},
          {"views_per_scene", c.views_per_scene}};
}

GenDataConfig gen_data_config_from_json(const Json& j, GenDataConfig c) {
  check_keys(j,
             {"resolution", "spp", "max_bounces", "frames", "test_fraction", "seed", "scene",
              "colored_light_probability", "filter", "views_per_scene"},
             "data");
  read(j, "resolution", c.resolution);
  read(j, "spp", c.spp);
  read(j, "max_bounces", c.max_bounces);
  read(j, "frames", c.frames);
  read(j, "test_fraction", c.test_fraction);
  read(j, "seed", c.seed);
  read(j, "scene", c.scene);
  read(j, "colored_light_probability", c.colored_light_probability);
  read(j, "views_per_scene", c.views_per_scene);
  if (j.contains("filter")) {
    const Json& f = j.at("filter");
    check_keys(f, {"min_mean_depth", "min_depth_var", "max_dark_fraction", "probe_size"}, "filter");
    read(f, "min_mean_depth", c.filter.min_mean_depth);
    read(f, "min_depth_var", c.filter.min_depth_var);
    read(f, "max_dark_fraction", c.filter.max_dark_fraction);
    read(f, "probe_size", c.filter.probe_size);
  }
  return c;
}

Json to_json(const GenDataStats& s) {
  return {{"accepted", s.accepted}, {"rejected", s.rejected}, {"scenes", s.scenes},
          {"rejected_too_close", s.too_close}, {"rejected_too_flat", s.too_flat},
          {"rejected_too_dark", s.too_dark}, {"max_recomposition_error", s.max_recomposition_error}};
}

GenDataStats generate_dataset(const GenDataConfig& cfg, const fs::path& out, const LogSink& log) {
  cfg.validate();
  fs::create_directories(out);
  SceneRules rules = SceneRules::defaults();
  rules.colored_light_probability = cfg.colored_light_probability;
  const bool long_range = cfg.scene == "long_range";

  std::vector<std::int64_t> order(static_cast<std::size_t>(cfg.frames));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::int64_t>(i);
  Rng split_rng(cfg.seed, kSplitStream);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(split_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  const auto n_test = static_cast<std::size_t>(std::llround(cfg.frames * cfg.test_fraction));
  std::vector<char> is_test(order.size(), 0);
  for (std::size_t k = 0; k < n_test && k < order.size(); ++k) is_test[static_cast<std::size_t>(order[k])] = 1;

  GenDataStats stats;
  Manifest manifest;
  for (std::int64_t i = 0; i < cfg.frames; ++i) {
    std::optional<Scene> scene;
    std::optional<Camera> camera;
    for (std::uint64_t attempt = 0; !camera; ++attempt) {
      const std::uint64_t counter = (static_cast<std::uint64_t>(i) << 20) + attempt;
      const std::uint64_t scene_seed = Rng(cfg.seed, kSceneStream, counter).next_u64();
      scene = long_range ? build_long_range_scene(scene_seed) : build_random_scene(scene_seed, rules);
      ++stats.scenes;
      Rng view(cfg.seed, kViewStream, counter);
      if (long_range) {
        camera = long_range_camera(view, cfg.resolution, cfg.resolution);
        break;
      }
      for (int v = 0; v < cfg.views_per_scene && !camera; ++v) {
        const Camera cam = random_camera(*scene, view, cfg.resolution, cfg.resolution);
        const auto r = filter_viewpoint(cam, *scene, cfg.filter);
        if (r.accepted) {
          camera = cam;
          break;
        }
        ++stats.rejected;
        stats.too_close += r.mean_depth < cfg.filter.min_mean_depth;
        stats.too_flat += r.depth_var < cfg.filter.min_depth_var;
        stats.too_dark += r.dark_fraction > cfg.filter.max_dark_fraction;
        const std::int64_t draws = stats.rejected + stats.accepted;
        if (draws >= 100 && stats.rejected * 100 > draws * 99) {
          throw DatasetError("gen-data: " + std::to_string(stats.rejected) + " of " +
                             std::to_string(draws) +
                             " viewpoints rejected (over 99%); rejected for mean depth: " +
                             std::to_string(stats.too_close) + ", depth variance: " +
                             std::to_string(stats.too_flat) + ", dark fraction: " +
                             std::to_string(stats.too_dark) + ". Relax the view filter.");
        }
      }
    }
    ++stats.accepted;
    const std::uint64_t render_seed = Rng(cfg.seed, kRenderStream, static_cast<std::uint64_t>(i)).next_u64();
    const auto frame = render_frame(*scene, *camera, {cfg.spp, cfg.max_bounces, kDemodEpsilon}, render_seed);
    const std::string id = frame_id(i);
    const double recompose = recomposition_error(frame);
    if (!(recompose <= kRecompositionTolerance)) {
      throw NumericalError("gen-data: frame " + id + " fails recomposition (relative error " +
                           std::to_string(recompose) + ")");
    }
    stats.max_recomposition_error = std::max(stats.max_recomposition_error, recompose);
    const std::string split = is_test[static_cast<std::size_t>(i)] ? "test" : "train";
    manifest.frames.push_back(write_frame(frame, out, id, split));
    if (log) log({{"frame", id}, {"split", split}, {"accepted", stats.accepted}, {"rejected", stats.rejected}});
  }
  manifest.config = {{"generator", to_json(cfg)}, {"stats", to_json(stats)}};
  write_manifest(manifest, out / "manifest.json");
  return stats;
}

RunConfig run_config_from_json(const Json& j) {
  check_keys(j, {"data", "model", "train"}, "run");
  RunConfig c;
  if (j.contains("data")) c.data = gen_data_config_from_json(j.at("data"));
  if (j.contains("model")) {
    c.model = model_config_from_json(j.at("model"));
    c.model_resolution_set = j.at("model").contains("height") || j.at("model").contains("width");
  }
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  return c;
}

RunConfig load_run_config(const std::optional<fs::path>& path) {
  if (!path) return {};
  Json j;
  try {
    j = Json::parse(read_file(*path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path->string() + ": " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return run_config_from_json(j);
}

Json to_json(const RunConfig& c) {
  return {{"data", to_json(c.data)}, {"model", to_json(c.model)}, {"train", to_json(c.train)}};
}

Json cmd_train(const TrainOptions& o, const LogSink& progress) {
  RunConfig rc = load_run_config(o.config);
  const Dataset ds = load_dataset(manifest_path(o.data));
  const std::string data_hash = ds.content_hash();
  Json inputs{{"dataset", data_hash}, {"config", o.config ? sha256_file(*o.config) : ""}};

  TrainState state;
  if (o.resume) {
    state = load_checkpoint(*o.resume);
    inputs["resume"] = sha256_file(*o.resume);
  } else {
    if (!rc.model_resolution_set) {
      rc.model.height = ds.height();
      rc.model.width = ds.width();
    }
    rc.model.validate();
    state = TrainState::create(rc.model, rc.train);
  }
  if (o.epochs) state.config.epochs = *o.epochs;
  if (o.overfit_iterations) state.config.overfit_iterations = *o.overfit_iterations;
  state.config.validate();
  require_resolution(state.model.config, ds);
  state.provenance = {{"dataset", data_hash}};

  fs::create_directories(o.out);
  auto result = train_loop(ds, std::move(state), progress);
  save_checkpoint(result.state, o.out / "model.ckpt");
  Json outputs{{"model.ckpt", sha256_file(o.out / "model.ckpt")}};
  if (result.best) {
    save_checkpoint(*result.best, o.out / "best.ckpt");
    outputs["best.ckpt"] = sha256_file(o.out / "best.ckpt");
  }
  Json doc{{"command", "train"},
           {"config", state_config(result.state)},
           {"inputs", inputs},
           {"outputs", outputs},
           {"best_psnr", result.best ? Json(report_psnr(result.best_psnr)) : Json(nullptr)},
           {"log", result.log}};
  write_file_atomic(o.out / "train_log.json", doc.dump(2) + "\n");
  return doc;
}

void write_preview_png(const Image& hdr, const fs::path& path) {
  if (hdr.channels != 3) throw std::invalid_argument("write_preview_png: expected 3 channels");
  const Image ldr = tone_map(hdr);
  std::vector<unsigned char> rgb(ldr.plane() * 3);
  for (int y = 0; y < ldr.height; ++y) {
    for (int x = 0; x < ldr.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(ldr.at(c, y, x)), 0.0, 1.0);
        rgb[(static_cast<std::size_t>(y) * ldr.width + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(ldr.width);
  img.height = static_cast<png_uint_32>(ldr.height);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw IoError(std::string("png: ") + img.message);
  }
  std::string bytes(size, '\0');
  if (!png_image_write_to_memory(&img, bytes.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw IoError(std::string("png: ") + img.message);
  }
  bytes.resize(size);
  write_file_atomic(path, bytes);
}

Json cmd_infer(const InferOptions& o) {
  const TrainState state = load_checkpoint(o.ckpt);
  const Dataset ds = load_dataset(manifest_path(o.data));
  require_resolution(state.model.config, ds);
  const FrameRecord frame = ds.load_frame(ds.find(o.frame_id));

  const auto t0 = std::chrono::steady_clock::now();
  const FramePrediction p = predict_frame(state.model, frame);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(o.out);
  const std::string stem = o.frame_id + "_";
  write_pfm(p.S_ind, o.out / (stem + "S_ind.pfm"));
  write_pfm(p.L_ind, o.out / (stem + "L_ind.pfm"));
  write_pfm(p.L, o.out / (stem + "L.pfm"));
  write_preview_png(p.L, o.out / (stem + "preview.png"));

  double min_excess = std::numeric_limits<double>::infinity();
  bool finite = true;
  for (std::size_t i = 0; i < p.L.data.size(); ++i) {
    min_excess = std::min(min_excess, static_cast<double>(p.L.data[i]) - frame.L_d.data[i]);
    finite = finite && std::isfinite(p.L.data[i]) && std::isfinite(p.S_ind.data[i]);
  }
  const auto score = score_frame(o.frame_id, p.L, reference_radiance(frame));
  Json doc{{"command", "infer"},
           {"frame", o.frame_id},
           {"config", state_config(state)},
           {"inputs", {{"checkpoint", sha256_file(o.ckpt)}, {"dataset", ds.content_hash()}}},
           {"seconds", seconds},
           {"finite", finite},
           {"min_L_minus_Ld", min_excess},
           {"psnr", report_psnr(score.psnr)},
           {"ssim", score.ssim},
           {"outputs", Json::array({stem + "S_ind.pfm", stem + "L_ind.pfm", stem + "L.pfm", stem + "preview.png"})}};
  write_file_atomic(o.out / (stem + "infer.json"), doc.dump(2) + "\n");
  return doc;
}

Json cmd_eval(const EvalOptions& o, const LogSink& progress) {
  if (!o.ablate.empty() && o.ablate != "no-gfa") {
    throw ConfigError("eval: unknown ablation '" + o.ablate + "' (expected 'no-gfa')");
  }
  const TrainState state = load_checkpoint(o.ckpt);
  const Dataset ds = load_dataset(manifest_path(o.data));
  require_resolution(state.model.config, ds);

  auto test = ds.split_indices("test");
  if (o.max_frames > 0 && test.size() > static_cast<std::size_t>(o.max_frames)) test.resize(o.max_frames);
  std::vector<std::pair<std::string, Predictor>> predictors{
      {"model", [&](const FrameRecord& f) { return predict_frame(state.model, f).L; }}};

  std::optional<TrainState> ablated;
  if (o.ablate == "no-gfa") {
    ModelConfig mc = state.model.config;
    mc.use_gfa = false;
    TrainConfig tc = state.config;
    auto result = train_loop(ds, TrainState::create(mc, tc), progress);
    ablated = std::move(result.state);
    predictors.emplace_back("model_no_gfa",
                            [&](const FrameRecord& f) { return predict_frame(ablated->model, f).L; });
  }
  EvalReport report = evaluate(ds, ds.split_indices("train"), test, predictors);
  report.dataset_hash = ds.content_hash();
  report.config = state_config(state);

  Json doc{{"command", "eval"},
           {"config", {{"checkpoint", state_config(state)}, {"ablate", o.ablate}, {"max_frames", o.max_frames}}},
           {"inputs", {{"checkpoint", sha256_file(o.ckpt)}, {"dataset", report.dataset_hash}}},
           {"report", to_json(report)}};

  if (ablated) {
    ModelConfig conv_only = state.model.config;
    conv_only.use_gfa = false;
    const int radius = receptive_field_radius(conv_only);
    Json rows = Json::object();
    for (const auto& [name, predict] : predictors) {
      double sum = 0.0;
      int n = 0;
      for (auto i : test) {
        const FrameRecord f = ds.load_frame(i);
        const auto mask = far_shadow_mask(f.L_d, radius);
        const double v = psnr_masked(tone_map(predict(f)), tone_map(reference_radiance(f)), mask);
        if (std::isnan(v)) continue;
        sum += report_psnr(v);
        ++n;
      }
      rows[name] = {{"frames", n}, {"mean_psnr", n > 0 ? Json(sum / n) : Json(nullptr)}};
    }
    doc["far_shadow"] = {{"radius", radius}, {"methods", rows}};
  }
  fs::create_directories(o.report.has_parent_path() ? o.report.parent_path() : fs::path("."));
  write_file_atomic(o.report, doc.dump(2) + "\n");
  return doc;
}

Json cmd_gradcheck(const GradcheckOptions& o, bool& passed) {
  const auto report = run_gradcheck_suite(o);
  passed = report.passed();
  Json doc = to_json(report);
  doc["command"] = "gradcheck";
  doc["config"] = {{"seeds", o.seeds},
                   {"double_mode", o.double_mode},
                   {"float_mode", o.float_mode},
                   {"network", o.network},
                   {"double_tolerance", o.double_tolerance},
                   {"float_tolerance", o.float_tolerance},
                   {"inject_fault", o.inject_fault}};
  return doc;
}

}  // namespace ngi
